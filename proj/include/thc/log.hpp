#pragma once

#include <functional>
#include <string_view>

namespace thc {

using WarningSink = std::function<void(std::string_view)>;

/// Route library warnings somewhere other than stderr. Returns the previous
/// sink. Passing an empty function restores the default.
WarningSink set_warning_sink(WarningSink sink);

void warn(std::string_view message);

}  // namespace thc
