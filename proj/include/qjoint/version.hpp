#pragma once

namespace qjoint {

inline constexpr const char* version = "0.1.0";

}  // namespace qjoint
