#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hinclus {

/// Splits on Unicode whitespace, strips ASCII punctuation, lowercases
/// ASCII letters. Tokens that end up empty are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Normalizes a lexicon surface form through the tokenizer and joins the
/// tokens with single spaces. Returns "" when nothing survives.
std::string normalize_surface(std::string_view surface);

/// Bundled list of 150 common English stopwords (all lowercase).
const std::vector<std::string>& stopword_list();

bool is_stopword(std::string_view token);

std::string join_tokens(std::span<const std::string> tokens, std::string_view sep = " ");

}  // namespace hinclus
