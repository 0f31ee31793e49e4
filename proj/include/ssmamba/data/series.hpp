#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ssmamba/temporal/calendar.hpp"

namespace ssmamba::data {

using temporal::Date;

struct Observation {
  Date date;
  double value = 0.0;
};

// One named daily series. Dates are strictly increasing; calendar gaps
// (weekends, holidays) are simply absent observations.
struct SeriesRecord {
  std::string name;
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
  std::vector<double> values() const;
  std::vector<Date> dates() const;
  // Throws InputError if dates are not strictly increasing or a value is
  // non-finite.
  void validate() const;
};

// Reads a `date,value` CSV. Rows may appear in any order; they are sorted.
// Duplicate dates and unparseable values raise InputError with the line.
SeriesRecord load_series_csv(const std::filesystem::path& path, const std::string& name);
void save_series_csv(const SeriesRecord& record, const std::filesystem::path& path);

struct ManifestEntry {
  std::string name;
  std::filesystem::path path;
};

// JSON list of {"name": ..., "path": ...}; relative paths resolve against
// the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);
std::vector<SeriesRecord> load_datasets(const std::filesystem::path& manifest);

}  // namespace ssmamba::data
