// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "graphdec/llm_gateway.hpp"

namespace graphdec::detail {

std::unique_ptr<Provider> make_http_provider(const ModelConfig& config, std::string api_key);

}  // namespace graphdec::detail
