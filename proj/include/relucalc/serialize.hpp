#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relucalc/net.hpp"

namespace relucalc {

inline constexpr int kNetFormatVersion = 1;

struct NetDocument {
  ReluNet net;
  std::optional<std::vector<ChannelRole>> roles;
  std::optional<Box> domain_hint;

  bool is_special() const { return roles.has_value(); }
  SpecialNet special() const;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_json_string(const ReluNet& net, const std::optional<Box>& hint = std::nullopt);
std::string to_json_string(const SpecialNet& net);
NetDocument from_json_string(const std::string& text);

void save(const ReluNet& net, const std::string& path);
void save(const SpecialNet& net, const std::string& path);
NetDocument load(const std::string& path);

}  // namespace relucalc
