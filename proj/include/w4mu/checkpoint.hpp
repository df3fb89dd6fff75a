#pragma once

#include <string>
#include <vector>

#include "w4mu/params.hpp"

namespace w4mu::harness {

/// Binary checkpoint: magic "W4MU", version u32 LE, array count u32, then
/// per array: name length u16 + UTF-8 name + ndim u8 + dims u32[] + row-major
/// 64-bit LE reals. Array names are "<set>.<tensor>"; bit-exact round trip.
void save_checkpoint(const std::vector<ParamSet>& sets, const std::string& path);
std::vector<ParamSet> load_checkpoint(const std::string& path);

/// Single-set helpers that look the set up by name.
ParamSet load_checkpoint_set(const std::string& path, const std::string& set_name);

}  // namespace w4mu::harness
