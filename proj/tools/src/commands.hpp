#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace hgconv::cli {

struct GenOptions {
  std::string spec;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

struct TrainOptions {
  std::string data;
  std::string config;  // empty: defaults
  std::string out;
  bool force = false;
  std::string sweep;   // JSON array of config objects
  std::size_t jobs = 1;
  std::string self;    // argv[0], for sweep children
};

struct EvalOptions {
  std::string data;
  std::string model;
  std::string config;  // empty: config.json next to the model
  std::string out;
  bool force = false;
};

struct AblateOptions {
  std::string variant;
  std::string data;
  std::string config;
  std::string out;
  bool force = false;
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t instances = 20;
};

struct ExportOptions {
  std::string what;
  std::string data;
  std::string model;
  std::string config;
  std::string out;
  std::string type;  // empty: the labeled type
  std::optional<std::size_t> node;
  bool force = false;
};

int cmd_gen(const GenOptions& o);
int cmd_train(const TrainOptions& o);
int cmd_eval(const EvalOptions& o);
int cmd_ablate(const AblateOptions& o);
int cmd_gradcheck(const GradcheckOptions& o);
int cmd_export(const ExportOptions& o);

}  // namespace hgconv::cli
