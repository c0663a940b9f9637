#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace hgconv::cli {

/// Provenance record written last, via temp file + rename, into the output dir.
class RunManifest {
 public:
  RunManifest(std::string command, std::filesystem::path out_dir);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::string& key, const std::filesystem::path& path);
  /// Writes `text` to out_dir/name and records it.
  void write_output(const std::string& name, const std::string& text);
  /// Records a file or directory written by someone else.
  void record_output(const std::string& name);

  void commit() const;

 private:
  std::string command_;
  std::filesystem::path out_dir_;
  nlohmann::json config_;
  std::uint64_t seed_ = 0;
  nlohmann::json inputs_ = nlohmann::json::object();
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
  std::string started_at_;
};

/// Creates `dir`; an existing path is an error unless `force`, in which case it
/// is removed first.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

/// Writes via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// HGCONV_THREADS, validated; kernels are sequential for every value.
std::string thread_setting();

}  // namespace hgconv::cli
