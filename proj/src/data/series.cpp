#include "ssmamba/data/series.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ssmamba/errors.hpp"
#include "ssmamba/num/text.hpp"

namespace ssmamba::data {

std::vector<double> SeriesRecord::values() const {
  std::vector<double> out;
  out.reserve(observations.size());
  for (const auto& o : observations) out.push_back(o.value);
  return out;
}

std::vector<Date> SeriesRecord::dates() const {
  std::vector<Date> out;
  out.reserve(observations.size());
  for (const auto& o : observations) out.push_back(o.date);
  return out;
}

void SeriesRecord::validate() const {
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (!std::isfinite(observations[i].value)) {
      throw InputError("series '" + name + "': non-finite value on " + observations[i].date.to_string());
    }
    if (i > 0 && !(observations[i - 1].date < observations[i].date)) {
      throw InputError("series '" + name + "': dates not strictly increasing at " +
                       observations[i].date.to_string());
    }
  }
}

SeriesRecord load_series_csv(const std::filesystem::path& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file " + path.string());
  const std::string where = path.string();
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw InputError(where + ": empty file (expected header 'date,value')");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (num::trim(line) != "date,value") {
    throw InputError(where + ":1: expected header 'date,value', got '" + line + "'");
  }

  struct Row {
    Observation obs;
    std::size_t line;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (num::trim(line).empty()) continue;
    const auto at = where + ":" + std::to_string(line_no) + ": ";
    const auto fields = num::split(line, ',');
    if (fields.size() != 2) throw InputError(at + "expected 2 fields, got " + std::to_string(fields.size()));
    Date date;
    try {
      date = Date::parse(num::trim(fields[0]));
    } catch (const InputError& e) {
      throw InputError(at + e.what());
    }
    const auto value = num::parse_double(fields[1]);
    if (!value || !std::isfinite(*value)) {
      throw InputError(at + "non-numeric value '" + std::string(num::trim(fields[1])) + "'");
    }
    rows.push_back({{date, *value}, line_no});
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.obs.date < b.obs.date; });
  SeriesRecord rec;
  rec.name = name;
  rec.observations.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].obs.date == rows[i - 1].obs.date) {
      const auto first = std::min(rows[i].line, rows[i - 1].line);
      const auto second = std::max(rows[i].line, rows[i - 1].line);
      throw InputError(where + ":" + std::to_string(second) + ": duplicate date " + rows[i].obs.date.to_string() +
                       " (first seen on line " + std::to_string(first) + ")");
    }
    rec.observations.push_back(rows[i].obs);
  }
  return rec;
}

void save_series_csv(const SeriesRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "date,value\n";
  for (const auto& o : record.observations) out << o.date.to_string() << ',' << num::to_shortest(o.value) << '\n';
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data manifest " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_array()) throw InputError(path.string() + ": manifest must be a JSON list of {name, path}");
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("name") || !item.contains("path") || !item["name"].is_string() ||
        !item["path"].is_string()) {
      throw InputError(path.string() + ": every entry needs string fields 'name' and 'path'");
    }
    ManifestEntry e{item["name"].get<std::string>(), item["path"].get<std::string>()};
    if (e.name.empty()) throw InputError(path.string() + ": empty series name");
    if (!seen.insert(e.name).second) throw InputError(path.string() + ": duplicate series name '" + e.name + "'");
    if (e.path.is_relative()) e.path = path.parent_path() / e.path;
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : entries) doc.push_back({{"name", e.name}, {"path", e.path.string()}});
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<SeriesRecord> load_datasets(const std::filesystem::path& manifest) {
  std::vector<SeriesRecord> out;
  for (const auto& e : load_manifest(manifest)) out.push_back(load_series_csv(e.path, e.name));
  return out;
}

}  // namespace ssmamba::data
