// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>

namespace graphdec::detail {

struct EmbeddedRuleSet {
  std::string_view version;
  std::string_view text;
};

// Rule catalogs compiled in from resources/rules/<version>.txt.
std::span<const EmbeddedRuleSet> embedded_rule_sets();

}  // namespace graphdec::detail
