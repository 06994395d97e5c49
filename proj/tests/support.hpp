#pragma once

// Helpers shared by the test executables.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace testsupport {

inline std::string data_path(const std::string& rel) { return std::string(GUARDIAN_DATA_DIR) + "/" + rel; }
inline std::string fixture_path(const std::string& rel) { return std::string(GUARDIAN_FIXTURE_DIR) + "/" + rel; }

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("guardian_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport

#include "guardian/schema.hpp"
#include "guardian/timeutil.hpp"

namespace testsupport {

/// The smallest record the default schema accepts.
inline guardian::Json minimal_record(const std::string& case_id = "VA-0001") {
  auto r = guardian::record_skeleton(guardian::default_schema());
  r["case_id"] = case_id;
  r["provenance"]["source_label"] = "fixture";
  r["provenance"]["extraction_path"] = "rule";
  return r;
}

/// A schema-valid record with every optional field independently null or
/// populated. Strings include separators, quotes and line breaks.
class RecordGenerator {
 public:
  explicit RecordGenerator(std::uint64_t seed) : rng_(seed) {}

  guardian::Json next() {
    using guardian::Json;
    Json r = minimal_record("R-" + std::to_string(counter_++) + pick({"", "-x", "#2", ".a/b"}));
    auto& d = r["demographic"];
    if (coin()) d["name"] = text();
    d["sex"] = pick({"female", "male", "unknown"});
    if (coin()) d["age_years"] = range(0, 120);
    if (coin()) set_pair(d, "age_min", "age_max", 0, 120);
    if (coin()) set_pair(d, "height_min_cm", "height_max_cm", 30, 250);
    if (coin()) set_pair(d, "weight_min_kg", "weight_max_kg", 1, 400);
    if (coin()) d["race_ethnicity"] = text();

    auto& s = r["spatial"];
    if (coin()) s["last_seen_location"] = text();
    if (coin()) s["city"] = text();
    if (coin()) s["county"] = text();
    if (coin()) s["state"] = text();
    if (coin()) s["postal_code"] = digits(5) + (coin() ? "-" + digits(4) : "");
    if (coin()) {
      s["lat"] = decimal(-90, 90);
      s["lon"] = decimal(-180, 180);
      s["geocode_method"] = pick({"gazetteer", "source_provided"});
      s["geocode_plausible"] = coin();
    } else {
      s["geocode_method"] = "none";
    }

    auto& t = r["temporal"];
    if (coin()) t["last_seen_ts"] = date_or_datetime();
    if (coin()) t["timezone"] = pick({"America/New_York", "-04:00", "Z", "UTC"});
    auto& n = r["narrative_osint"];
    if (coin()) n["circumstances"] = text() + "\n" + text();
    if (coin()) n["clothing_description"] = text();
    if (coin()) n["distinctive_features"] = text();
    int cues = range(0, 3);
    for (int i = 0; i < cues; ++i) n["movement_cues"].push_back(text());
    r["outcome"]["status"] = pick({"missing", "located", "deceased", "unknown"});
    if (coin()) r["outcome"]["status_ts"] = date_or_datetime();

    auto& p = r["provenance"];
    p["source_family"] = pick({"registry_form", "bulletin", "narrative_profile", "unknown"});
    p["extraction_path"] = pick({"rule", "llm"});
    p["engine_used"] = pick({"layout", "basic", "ocr", "plaintext"});
    p["document_id"] = "doc_" + digits(3);
    p["ingest_ts"] = "2024-01-0" + std::to_string(range(1, 9)) + "T00:00:00Z";
    p["repair_count"] = p["extraction_path"] == "llm" ? range(0, 3) : 0;
    p["warnings_count"] = range(0, 5);
    if (coin()) {
      // Origin maps are keyed in sorted order, as the pipeline writes them.
      for (const char* f : {"demographic.name", "narrative_osint.movement_cues.0", "spatial.city"}) {
        if (!coin()) continue;
        int b = range(0, 500);
        p["field_origins"][f] = {{"segment_index", range(0, 3)}, {"char_start", b}, {"char_end", b + range(0, 40)}};
      }
    }
    return r;
  }

 private:
  bool coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }
  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double decimal(double lo, double hi) {
    // Four decimal places keeps values representable in short text.
    return std::round(std::uniform_real_distribution<double>(lo, hi)(rng_) * 1e4) / 1e4;
  }
  std::string pick(std::initializer_list<const char*> xs) {
    return *(xs.begin() + range(0, static_cast<int>(xs.size()) - 1));
  }
  std::string digits(int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += static_cast<char>('0' + range(0, 9));
    return s;
  }
  std::string text() {
    static const char* words[] = {"Culpeper", "north", "O'Neil", "\"quoted\"", "a,b", "x;y", "Route 1",
                                  "caf\xC3\xA9", "12", "true", "-", "tab\there"};
    std::string s = words[range(0, 11)];
    int extra = range(0, 3);
    for (int i = 0; i < extra; ++i) s += std::string(" ") + words[range(0, 11)];
    return s;
  }
  void set_pair(guardian::Json& obj, const char* lo, const char* hi, int min, int max) {
    int a = range(min, max), b = range(min, max);
    obj[lo] = std::min(a, b);
    obj[hi] = std::max(a, b);
  }
  std::string date_or_datetime() {
    std::string d = guardian::format_iso_date(range(1990, 2024), range(1, 12), range(1, 28));
    if (coin()) return d;
    char buf[32];
    std::snprintf(buf, sizeof buf, "T%02d:%02d:00", range(0, 23), range(0, 59));
    return d + buf + pick({"Z", "-04:00", "+05:30", ""});
  }

  std::mt19937_64 rng_;
  int counter_ = 0;
};

}  // namespace testsupport
