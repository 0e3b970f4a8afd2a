#include "segmap/map_io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace segmap {

namespace {

static_assert(std::endian::native == std::endian::little, "map encoding assumes a little-endian host");

// 4 magic + 2 version + 4 count + 2 frame-id length
constexpr std::size_t kFixedHeader = 12;
constexpr std::size_t kFooter = 4;

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw TruncatedMap("map file ends early");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // crc32 takes a uInt length; feed large buffers in pieces.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, std::numeric_limits<uInt>::max()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

template <class U>
U checked_unsigned(KeyframeId v, const char* what) {
  if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<U>::max()) {
    throw std::out_of_range(std::string(what) + " does not fit the map encoding");
  }
  return static_cast<U>(v);
}

}  // namespace

std::size_t map_file_size(std::size_t objects, const std::string& frame_id) {
  return kFixedHeader + frame_id.size() + kMapBytesPerObject * objects + kFooter;
}

std::string encode_map(const VehicleMap& map) {
  if (map.frame_id.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::length_error("frame id too long");
  }
  if (map.objects.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("too many objects");
  }
  std::string out;
  out.reserve(map_file_size(map.objects.size(), map.frame_id));
  out.append(kMapMagic, 4);
  put<std::uint16_t>(out, kMapVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(map.objects.size()));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(map.frame_id.size()));
  out.append(map.frame_id);
  for (const MapObject& o : map.objects) {
    for (int k = 0; k < 3; ++k) put<float>(out, static_cast<float>(o.position[k]));
    put<float>(out, static_cast<float>(o.size_m));
    if (o.track_len < 0 || o.track_len > std::numeric_limits<std::uint16_t>::max()) {
      throw std::out_of_range("track length does not fit the map encoding");
    }
    put<std::uint16_t>(out, static_cast<std::uint16_t>(o.track_len));
    put<std::uint32_t>(out, checked_unsigned<std::uint32_t>(o.first_kf, "first keyframe"));
    put<std::uint32_t>(out, checked_unsigned<std::uint32_t>(o.last_kf, "last keyframe"));
  }
  put<std::uint32_t>(out, crc_of(out.data(), out.size()));
  return out;
}

VehicleMap decode_map(const std::string& bytes) {
  if (bytes.size() < 4) throw TruncatedMap("map file shorter than its magic");
  if (std::memcmp(bytes.data(), kMapMagic, 4) != 0) throw BadMagic("not a map file");
  std::size_t pos = 4;
  const auto version = get<std::uint16_t>(bytes, pos);
  if (version != kMapVersion) {
    throw VersionMismatch("map version " + std::to_string(version) + ", expected " +
                          std::to_string(kMapVersion));
  }
  const auto count = get<std::uint32_t>(bytes, pos);
  const auto id_len = get<std::uint16_t>(bytes, pos);
  if (pos + id_len > bytes.size()) throw TruncatedMap("map file ends inside the frame id");
  VehicleMap map;
  map.frame_id.assign(bytes.data() + pos, id_len);
  pos += id_len;

  const std::size_t expected = pos + kMapBytesPerObject * count + kFooter;
  if (bytes.size() < expected) throw TruncatedMap("map payload shorter than its object count");
  if (bytes.size() > expected) throw InvalidMapContent("trailing bytes after the checksum");
  const std::size_t body = expected - kFooter;
  std::size_t crc_pos = body;
  const auto stored = get<std::uint32_t>(bytes, crc_pos);
  if (stored != crc_of(bytes.data(), body)) throw ChecksumMismatch("map checksum mismatch");

  map.objects.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    MapObject o;
    for (int c = 0; c < 3; ++c) o.position[c] = get<float>(bytes, pos);
    o.size_m = get<float>(bytes, pos);
    o.track_len = get<std::uint16_t>(bytes, pos);
    o.first_kf = get<std::uint32_t>(bytes, pos);
    o.last_kf = get<std::uint32_t>(bytes, pos);
    if (!o.position.allFinite() || !std::isfinite(o.size_m) || !(o.size_m > 0.0)) {
      throw InvalidMapContent("object " + std::to_string(k) + " has a non-finite position or size");
    }
    if (o.last_kf < o.first_kf) {
      throw InvalidMapContent("object " + std::to_string(k) + " has an inverted keyframe range");
    }
    map.objects.push_back(o);
  }
  return map;
}

void save_map(const VehicleMap& map, const std::filesystem::path& path) {
  const std::string bytes = encode_map(map);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

VehicleMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_map(bytes);
}

}  // namespace segmap
