#include "trialmix/dataset_io.hpp"

#include "binary_io.hpp"
#include "trialmix/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace trialmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trial_name(int run_id, int trial_id) {
  return "trial " + std::to_string(trial_id) + " (run " + std::to_string(run_id) + ")";
}

Matrix read_csv(const fs::path& path, std::size_t channels, const std::string& who) {
  std::ifstream is(path);
  if (!is) throw LoadError(who + ": cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t cols = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw LoadError(who + ": unparsable value on line " + std::to_string(rows + 1) + " of " + path.string());
      }
      values.push_back(v);
      ++cols;
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      if (*p != ',') {
        throw LoadError(who + ": unexpected character on line " + std::to_string(rows + 1) + " of " + path.string());
      }
      ++p;
    }
    if (cols != channels) {
      throw LoadError(who + ": line " + std::to_string(rows + 1) + " has " + std::to_string(cols) +
                      " columns, manifest declares " + std::to_string(channels) + " channels");
    }
    ++rows;
  }
  Matrix m(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(rows));
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = values[t * channels + c];
    }
  }
  return m;
}

Matrix read_f64(const fs::path& path, std::size_t channels, const std::string& who) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw LoadError(who + ": cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(is.tellg());
  if (bytes % (8 * channels) != 0) {
    throw LoadError(who + ": " + path.string() + " size " + std::to_string(bytes) +
                    " bytes is not a whole number of " + std::to_string(channels) + "-channel samples");
  }
  is.seekg(0);
  const std::size_t samples = bytes / (8 * channels);
  Matrix m(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(samples));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!detail::read_le(is, m.data()[i])) throw LoadError(who + ": truncated " + path.string());
  }
  return m;
}

void write_csv(const fs::path& path, const Matrix& m) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index t = 0; t < m.cols(); ++t) {
    for (Eigen::Index c = 0; c < m.rows(); ++c) {
      std::fprintf(f, c == 0 ? "%.17g" : ",%.17g", m(c, t));
    }
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("failed writing " + path.string());
}

void write_f64(const fs::path& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.size(); ++i) detail::write_le(os, m.data()[i]);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

template <class T>
T field(const json& j, const char* key, const std::string& who) {
  if (!j.contains(key)) throw LoadError(who + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw LoadError(who + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

TrialDataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw LoadError("cannot open " + manifest_path.string());
  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception& e) {
    throw LoadError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  const std::string where = "manifest";
  const auto subject = manifest.value("subject", std::string{});
  const auto description = manifest.value("description", std::string{});
  const double fs = field<double>(manifest, "fs", where);
  const auto labels = field<std::vector<std::string>>(manifest, "channel_labels", where);
  if (!manifest.contains("trials") || !manifest["trials"].is_array()) {
    throw LoadError("manifest: 'trials' must be an array");
  }

  std::vector<Trial> trials;
  std::size_t position = 0;
  for (const auto& jt : manifest["trials"]) {
    ++position;
    const std::string entry = "trial entry " + std::to_string(position);
    const int trial_id = field<int>(jt, "trial_id", entry);
    const int run_id = field<int>(jt, "run_id", entry);
    const std::string who = trial_name(run_id, trial_id);
    if (jt.contains("fs") && field<double>(jt, "fs", who) != fs) {
      throw LoadError(who + ": sampling rate " + std::to_string(jt["fs"].get<double>()) +
                      " Hz differs from the dataset rate " + std::to_string(fs) + " Hz");
    }
    ClassLabel label;
    try {
      label = parse_class_label(field<std::string>(jt, "label", who));
    } catch (const DomainError& e) {
      throw LoadError(who + ": " + e.what());
    }
    const auto file = field<std::string>(jt, "file", who);
    const fs::path path = dir / file;
    Matrix data;
    if (path.extension() == ".csv") {
      data = read_csv(path, labels.size(), who);
    } else if (path.extension() == ".f64") {
      data = read_f64(path, labels.size(), who);
    } else {
      throw LoadError(who + ": unsupported file extension '" + path.extension().string() + "'");
    }
    if (!data.allFinite()) throw LoadError(who + ": non-finite sample in " + path.string());

    std::map<std::string, SampleRange> segments;
    if (jt.contains("segments")) {
      for (const auto& [name, range] : jt["segments"].items()) {
        if (!range.is_array() || range.size() != 2) {
          throw LoadError(who + ": segment '" + name + "' must be [begin, end]");
        }
        segments[name] = SampleRange{range[0].get<std::size_t>(), range[1].get<std::size_t>()};
      }
    }
    try {
      trials.push_back(Trial{MultichannelSignal(std::move(data), fs, labels), label, run_id, trial_id,
                             std::move(segments)});
    } catch (const DomainError& e) {
      throw LoadError(who + ": " + e.what());
    }
  }
  try {
    return TrialDataset(subject, description, std::move(trials));
  } catch (const DomainError& e) {
    throw LoadError(std::string("inconsistent dataset: ") + e.what());
  }
}

void save_dataset(const TrialDataset& d, const fs::path& dir, SampleFormat format) {
  fs::create_directories(dir);
  json manifest;
  manifest["subject"] = d.subject();
  manifest["description"] = d.description();
  manifest["fs"] = d.empty() ? 0.0 : d.fs();
  manifest["channel_labels"] = d.empty() ? std::vector<std::string>{} : d.channel_labels();
  json trials = json::array();
  const char* ext = format == SampleFormat::Csv ? ".csv" : ".f64";
  for (const auto& t : d.trials()) {
    const std::string file = "trial_" + std::to_string(t.run_id) + "_" + std::to_string(t.trial_id) + ext;
    if (format == SampleFormat::Csv) {
      write_csv(dir / file, t.signal.data());
    } else {
      write_f64(dir / file, t.signal.data());
    }
    json segments = json::object();
    for (const auto& [name, r] : t.segments) segments[name] = {r.begin, r.end};
    trials.push_back({{"trial_id", t.trial_id},
                      {"run_id", t.run_id},
                      {"label", to_string(t.label)},
                      {"segments", segments},
                      {"file", file}});
  }
  manifest["trials"] = trials;
  std::ofstream os(dir / "manifest.json");
  if (!os) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  os << manifest.dump(2) << '\n';
}

}  // namespace trialmix
