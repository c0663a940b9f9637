#include "run_manifest.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace hgconv::cli {

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* kSeedScheme =
    "derive_seed(root, purpose, a, b, c): FNV-1a of purpose mixed with root and indices through "
    "splitmix64. purposes: init, dropout(epoch), feat(layer, type), attn.micro(layer, relation), "
    "attn.macro(layer, type), negatives(epoch), val.pairs, kmeans, kmeans.restart(r), synthetic, pca";

}  // namespace

RunManifest::RunManifest(std::string command, fs::path out_dir)
    : command_(std::move(command)),
      out_dir_(std::move(out_dir)),
      start_(std::chrono::steady_clock::now()),
      started_at_(utc_now()) {}

void RunManifest::add_input(const std::string& key, const fs::path& path) { inputs_[key] = path.string(); }

void RunManifest::write_output(const std::string& name, const std::string& text) {
  write_file_atomic(out_dir_ / name, text);
  record_output(name);
}

void RunManifest::record_output(const std::string& name) { outputs_.push_back(name); }

void RunManifest::commit() const {
  nlohmann::json j;
  j["command"] = command_;
  j["version"] = HGCONV_VERSION;
  j["config"] = config_;
  j["seed"] = seed_;
  j["seed_scheme"] = kSeedScheme;
  j["threads"] = thread_setting();
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["started_at"] = started_at_;
  j["duration_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  write_file_atomic(out_dir_ / "manifest.json", j.dump(2) + "\n");
}

void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!force) throw std::runtime_error("output " + dir.string() + " exists (use --force to replace it)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << text;
    if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string thread_setting() {
  const char* v = std::getenv("HGCONV_THREADS");
  if (!v || !*v) return "1";
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw std::runtime_error("HGCONV_THREADS must be a positive integer");
  return v;
}

}  // namespace hgconv::cli
