#pragma once

#include <nlohmann/json.hpp>

#include "whe/bundle.hpp"

namespace test {

inline whe::EquivariantBundle bundle(const char* text) {
  return whe::make_bundle(nlohmann::json::parse(text));
}

inline const char* kO1 = R"({"summands":[{"degree":1,"weights":[0,1]}]})";
inline const char* kEqual = R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]}],"couplings":"none"})";
inline const char* kTwisted = R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[-1,0]}],"couplings":"none"})";
inline const char* kCoupledO0O2 = R"({"summands":[{"degree":0,"weights":[0,0]},{"degree":2,"weights":[-1,1]}],"couplings":"auto"})";
inline const char* kLifted = R"({"summands":[{"degree":0,"weights":[0,0]},{"degree":0,"weights":[1,1]}],"couplings":"auto"})";
inline const char* kRank3 = R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]},{"degree":1,"weights":[-1,0]}],"couplings":"none"})";
inline const char* kCoupledEqual = R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]}],"couplings":"auto"})";

}  // namespace test
