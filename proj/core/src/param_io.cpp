#include "hgconv/param_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hgconv {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string params_to_json(const ParamStore& params) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [name, t] : params) {
    if (!t.all_finite()) throw std::domain_error("params_to_json: non-finite value in " + name);
    os << (first ? "\n" : ",\n");
    first = false;
    os << "  " << nlohmann::json(name).dump() << ": {\"shape\": [" << t.rows() << ", " << t.cols()
       << "], \"values\": [";
    auto vs = t.data();
    for (std::size_t i = 0; i < vs.size(); ++i) os << (i ? ", " : "") << format_double(vs[i]);
    os << "]}";
  }
  os << (first ? "}\n" : "\n}\n");
  return os.str();
}

ParamStore params_from_json(std::string_view text) {
  const auto doc = nlohmann::json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("params: top level must be an object");
  ParamStore out;
  for (const auto& [name, entry] : doc.items()) {
    const auto& shape = entry.at("shape");
    if (!shape.is_array() || shape.size() != 2) {
      throw std::invalid_argument("params: " + name + " must have a 2-d shape");
    }
    const auto rows = shape[0].get<std::size_t>();
    const auto cols = shape[1].get<std::size_t>();
    out.set(name, Tensor(rows, cols, entry.at("values").get<std::vector<double>>()));
  }
  return out;
}

void save_params(const ParamStore& params, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << params_to_json(params);
}

ParamStore load_params(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return params_from_json(ss.str());
}

}  // namespace hgconv
