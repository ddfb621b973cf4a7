#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "selmut/model.hpp"

namespace selmut {

using PresetParams = std::map<std::string, std::string>;

/// Built-in models addressable by name:
///   advsel1d   a = x(1-x), R = r0 - r1 x - I, psi_g = 1, m = 0 (params r0, r1)
///   friedman2d d = 2, psi_a^j = y_j, R = 0, a given by expressions a1, a2 in
///              t, x1, x2, I1, I2 and any other numeric parameter (a_sup)
///   logistic0d a = 0, R = 1 - I, psi_g = 1 (trait-independent, d = 1)
///   nonlocal1d a = 1 - I with psi_a = 1, R = 1 - I with psi_g = 1
/// support_v0 is left as [0, 1] (or [-1, 1]^2); callers set it from the
/// initial density.
ModelSpec make_preset(const std::string& name, const PresetParams& params = {});

std::vector<std::string> preset_names();

void register_preset(const std::string& name, std::function<ModelSpec(const PresetParams&)> factory);

}  // namespace selmut
