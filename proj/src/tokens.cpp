#include "slipstream/tokens.hpp"

#include <stdexcept>

namespace slipstream {

CharEstimator::CharEstimator(int chars_per_token) : chars_per_token_(chars_per_token) {
    if (chars_per_token <= 0) {
        throw std::invalid_argument("chars_per_token must be positive");
    }
}

int CharEstimator::count(std::string_view text) const {
    if (text.empty()) return 0;
    const auto divisor = static_cast<std::size_t>(chars_per_token_);
    return static_cast<int>((text.size() + divisor - 1) / divisor);
}

std::shared_ptr<const TokenCounter> default_token_counter() {
    static const auto counter = std::make_shared<const CharEstimator>(4);
    return counter;
}

}  // namespace slipstream
