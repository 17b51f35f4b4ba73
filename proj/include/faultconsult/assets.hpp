#pragma once

#include <string>
#include <string_view>

namespace faultconsult {

// Embedded text asset by file stem (assets/prompts/<name>.txt).
std::string_view asset(std::string_view name);

}  // namespace faultconsult

#include <map>

namespace faultconsult {

// Replaces every `{{name}}` with vars.at(name); unknown names throw
// std::out_of_range so template drift fails loudly.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& vars);

}  // namespace faultconsult
