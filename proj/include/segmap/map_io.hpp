#pragma once

#include "segmap/vehicle_map.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace segmap {

inline constexpr char kMapMagic[4] = {'S', 'O', 'S', 'M'};
inline constexpr std::uint16_t kMapVersion = 1;
inline constexpr std::size_t kMapBytesPerObject = 26;

class MapFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagic : public MapFormatError {
 public:
  using MapFormatError::MapFormatError;
};
class VersionMismatch : public MapFormatError {
 public:
  using MapFormatError::MapFormatError;
};
class ChecksumMismatch : public MapFormatError {
 public:
  using MapFormatError::MapFormatError;
};
class TruncatedMap : public MapFormatError {
 public:
  using MapFormatError::MapFormatError;
};
class InvalidMapContent : public MapFormatError {
 public:
  using MapFormatError::MapFormatError;
};

/// Exact serialized size for a map with this many objects and frame id.
std::size_t map_file_size(std::size_t objects, const std::string& frame_id);

std::string encode_map(const VehicleMap& map);
VehicleMap decode_map(const std::string& bytes);

void save_map(const VehicleMap& map, const std::filesystem::path& path);
VehicleMap load_map(const std::filesystem::path& path);

}  // namespace segmap
