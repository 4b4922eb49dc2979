#pragma once

namespace leakprobe {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kReportSchema = "leakprobe.report.v1";
inline constexpr const char* kForestSchema = "leakprobe.forest.v1";

}  // namespace leakprobe
