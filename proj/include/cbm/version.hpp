#pragma once

namespace cbm {
inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kReportSchema = "cbm-report/1";
} // namespace cbm
