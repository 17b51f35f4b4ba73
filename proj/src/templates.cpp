#include <stdexcept>

#include "faultconsult/assets.hpp"

namespace faultconsult {

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw std::invalid_argument("unterminated template placeholder");
    out.append(tmpl.substr(pos, open - pos));
    const std::string_view name = tmpl.substr(open + 2, close - open - 2);
    auto it = vars.find(name);
    if (it == vars.end()) throw std::out_of_range("template variable not bound: " + std::string(name));
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

}  // namespace faultconsult
