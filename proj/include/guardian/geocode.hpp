#pragma once

// Offline place resolution against a local gazetteer, with a persistent
// key -> result cache and bounding-box plausibility.

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/warnings.hpp"

namespace guardian {

struct GazetteerEntry {
  std::string place_name;
  std::string admin_region;
  std::vector<std::string> postal_codes;
  double lat = 0;
  double lon = 0;
};

/// Region bounding boxes, addressable by name or abbreviation (case-insensitive).
struct RegionBox {
  std::string name;
  std::string abbreviation;
  double min_lat = 0, min_lon = 0, max_lat = 0, max_lon = 0;
  bool contains(double lat, double lon) const {
    return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
  }
};

class RegionTable {
 public:
  RegionTable() = default;
  explicit RegionTable(std::vector<RegionBox> boxes);
  /// Tab-separated: name, abbreviation, min_lat, min_lon, max_lat, max_lon.
  /// Lines starting with '#' are comments.
  static RegionTable parse(std::string_view text);
  static RegionTable load(const std::string& path);
  const RegionBox* find(std::string_view name_or_abbrev) const;
  /// Canonical lowercase region name, or the lowercased input when unknown.
  std::string canonical(std::string_view name_or_abbrev) const;
  const std::vector<RegionBox>& boxes() const { return boxes_; }

 private:
  std::vector<RegionBox> boxes_;
  std::map<std::string, size_t> index_;
};

struct MatchOutcome {
  std::optional<size_t> entry;
  bool ambiguous = false;
};

class Gazetteer {
 public:
  Gazetteer() = default;
  explicit Gazetteer(std::vector<GazetteerEntry> entries);
  Gazetteer(Gazetteer&& o) noexcept : entries_(std::move(o.entries_)), lookups_(o.lookups_.load()) {}
  Gazetteer& operator=(Gazetteer&& o) noexcept {
    entries_ = std::move(o.entries_);
    lookups_ = o.lookups_.load();
    return *this;
  }
  /// Tab-separated: place, region, postal codes (comma-separated, may be
  /// empty), lat, lon. '#' starts a comment line.
  static Gazetteer parse(std::string_view text);
  static Gazetteer load(const std::string& path);

  const std::vector<GazetteerEntry>& entries() const { return entries_; }
  /// Postal code, then exact place + region, then place within the bias
  /// region, then a unique place name. Counts one lookup per call.
  MatchOutcome match(std::string_view normalized_key, const std::optional<std::string>& bias_region,
                     const RegionTable& regions) const;
  long long lookups() const { return lookups_.load(); }

 private:
  std::vector<GazetteerEntry> entries_;
  mutable std::atomic<long long> lookups_{0};
};

struct GeocodeQuery {
  std::string normalized_key;
  std::optional<std::string> bias_region;
};

struct GeocodeResult {
  std::optional<double> lat, lon;
  std::optional<std::string> matched_place;
  bool cache_hit = false;
  std::optional<bool> plausible;
  bool ambiguous = false;
  bool operator==(const GeocodeResult&) const = default;
};

/// Lowercase, punctuation to separators, whitespace collapsed, a trailing
/// ZIP split into its own part, parts joined by "|". Throws Error on a
/// query with no usable characters.
std::string normalize_place(std::string_view raw);

/// Persistent cache. One tab-separated line per entry:
///   key, status (match|none|ambiguous), lat, lon, matched_place.
/// Writes append to the file immediately; compact() rewrites it sorted.
class GeocodeCache {
 public:
  GeocodeCache() = default;
  /// Loads the file when it exists; later lines win for repeated keys.
  explicit GeocodeCache(std::string path);

  std::optional<GeocodeResult> get(const std::string& key) const;
  void put(const std::string& key, const GeocodeResult& result);
  void compact();
  size_t size() const;
  long long hits() const { return hits_.load(); }
  long long misses() const { return misses_.load(); }

  static std::string key_for(const GeocodeQuery& q);

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::map<std::string, GeocodeResult> entries_;
  mutable std::atomic<long long> hits_{0}, misses_{0};
};

struct GeocodeOutput {
  GeocodeResult result;
  std::vector<Notice> notices;
};

/// Cache first; on a miss the gazetteer is consulted and the result (also a
/// miss) is written back.
GeocodeOutput geocode(const GeocodeQuery& query, const Gazetteer& gazetteer, const RegionTable& regions,
                      GeocodeCache& cache);

/// Coordinates present, not (0, 0), and inside the expected region's box
/// when one is given. An expected region missing from the table fails.
bool plausibility(const GeocodeResult& result, const std::optional<std::string>& expected_region,
                  const RegionTable& regions);

/// Fills spatial.lat/lon/geocode_method/geocode_plausible of a harmonized
/// record. Records whose method is source_provided are not looked up, only
/// checked for plausibility.
std::vector<Notice> geocode_record(Json& record, const Gazetteer& gazetteer, const RegionTable& regions,
                                   GeocodeCache& cache);

}  // namespace guardian
