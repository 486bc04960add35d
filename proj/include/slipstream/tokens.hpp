// Token accounting. The trigger predicate only needs a deterministic,
// concatenation-monotone measure, so the default is a bytes/4 estimate
// with a pluggable adapter for real tokenizers.
#pragma once

#include <memory>
#include <string_view>

namespace slipstream {

class TokenCounter {
public:
    virtual ~TokenCounter() = default;

    // Deterministic; monotone under concatenation:
    // count(a+b) >= max(count(a), count(b)).
    virtual int count(std::string_view text) const = 0;
};

// ceil(bytes / chars_per_token); empty text counts as zero.
class CharEstimator final : public TokenCounter {
public:
    explicit CharEstimator(int chars_per_token = 4);
    int count(std::string_view text) const override;

private:
    int chars_per_token_;
};

// Process-wide default adapter (a CharEstimator with divisor 4).
std::shared_ptr<const TokenCounter> default_token_counter();

}  // namespace slipstream
