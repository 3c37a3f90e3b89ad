#pragma once

#define TPSIM_VERSION "0.1.0"

namespace tpsim {
inline constexpr const char* version = TPSIM_VERSION;
}
