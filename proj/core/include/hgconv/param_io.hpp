#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hgconv/params.hpp"

namespace hgconv {

/// {"name": {"shape": [r, c], "values": [...]}, ...} with 17 significant digits,
/// keys in sorted order. Round-trips finite doubles bit-exactly.
std::string params_to_json(const ParamStore& params);
ParamStore params_from_json(std::string_view text);

void save_params(const ParamStore& params, const std::filesystem::path& path);
ParamStore load_params(const std::filesystem::path& path);

/// printf("%.17g") formatting used by every numeric text output.
std::string format_double(double x);

}  // namespace hgconv
