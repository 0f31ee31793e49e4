#pragma once

#include <functional>
#include <string_view>

namespace ssmamba {

// Warnings go to stderr unless a sink is installed (tests capture them).
using WarningSink = std::function<void(std::string_view)>;

void warn(std::string_view message);
WarningSink set_warning_sink(WarningSink sink);

}  // namespace ssmamba
