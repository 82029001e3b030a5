#pragma once

#include <cstdio>
#include <string>

namespace cvbell {

/// Fixed 9-significant-digit rendering used by every report and CSV file.
inline std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace cvbell
