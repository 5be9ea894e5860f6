#pragma once
// Tokenizer, sentence splitter, token-F1 similarity and the extractive
// frequency summarizer.

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "flexdoc/content/lexicon.hpp"
#include "flexdoc/model.hpp"

namespace flexdoc::content {

class ContentError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
inline char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
}  // namespace detail

/// Whitespace split, leading/trailing punctuation stripped, lowercased.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !detail::is_space(text[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && detail::is_punct(text[b])) ++b;
    while (e > b && detail::is_punct(text[e - 1])) --e;
    if (b < e) {
      std::string tok(text.substr(b, e - b));
      std::transform(tok.begin(), tok.end(), tok.begin(), detail::lower);
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

/// tokenize() minus stop words.
inline std::vector<std::string> content_tokens(std::string_view text) {
  auto toks = tokenize(text);
  std::erase_if(toks, [](const std::string& t) { return is_stop_word(t); });
  return toks;
}

struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

/// Splits on '.', '!' or '?' (plus trailing quotes/brackets) followed by
/// whitespace or end of text.  A period ending a known abbreviation does not
/// end a sentence.
inline std::vector<SentenceSpan> split_sentences(std::string_view text) {
  std::vector<SentenceSpan> out;
  auto push = [&](std::size_t b, std::size_t e) {
    while (b < e && detail::is_space(text[b])) ++b;
    while (e > b && detail::is_space(text[e - 1])) --e;
    if (b < e) out.push_back({b, e});
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t k = i + 1;
    while (k < text.size() && (text[k] == '"' || text[k] == '\'' || text[k] == ')' || text[k] == ']'))
      ++k;
    if (k < text.size() && !detail::is_space(text[k])) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > start && !detail::is_space(text[w - 1])) --w;
      std::string word(text.substr(w, i - w));
      while (!word.empty() && (word.front() == '(' || word.front() == '"')) word.erase(word.begin());
      std::transform(word.begin(), word.end(), word.begin(), detail::lower);
      if (is_abbreviation(word)) continue;
    }
    push(start, k);
    start = k;
    i = k - 1;
  }
  push(start, text.size());
  return out;
}

/// Token-level F1 over multiset overlap of content tokens.
inline double token_f1(std::string_view candidate, std::string_view original) {
  const auto a = content_tokens(candidate);
  const auto b = content_tokens(original);
  if (a.empty() || b.empty()) return (a.empty() && b.empty() && candidate == original) ? 1.0 : 0.0;
  std::map<std::string, int> ca, cb;
  for (const auto& t : a) ++ca[t];
  for (const auto& t : b) ++cb[t];
  int overlap = 0;
  for (const auto& [tok, n] : ca) {
    auto it = cb.find(tok);
    if (it != cb.end()) overlap += std::min(n, it->second);
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(a.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(b.size());
  return 2.0 * p * r / (p + r);
}

inline double similarity(std::string_view candidate, std::string_view original) {
  if (candidate.empty() || original.empty()) throw ContentError("similarity: empty input");
  return token_f1(candidate, original);
}

struct TextVariant {
  std::string text;
  std::vector<std::size_t> sentences;  // indices into split_sentences(original)
  double similarity_to_original = 1.0;
};

/// Mean document-frequency weight of each sentence's content tokens, where a
/// token's weight is its count over the whole text divided by the largest
/// count.
inline std::vector<double> sentence_scores(std::string_view text,
                                           const std::vector<SentenceSpan>& spans) {
  std::vector<std::vector<std::string>> toks;
  std::map<std::string, int> freq;
  for (const auto& s : spans) {
    toks.push_back(content_tokens(text.substr(s.begin, s.end - s.begin)));
    for (const auto& t : toks.back()) ++freq[t];
  }
  int max_count = 0;
  for (const auto& [_, n] : freq) max_count = std::max(max_count, n);
  std::vector<double> scores;
  for (const auto& ts : toks) {
    if (ts.empty() || max_count == 0) {
      scores.push_back(0.0);
      continue;
    }
    double sum = 0;
    for (const auto& t : ts) sum += static_cast<double>(freq[t]) / max_count;
    scores.push_back(sum / static_cast<double>(ts.size()));
  }
  return scores;
}

/// Extractive summary whose length is at most target_ratio of the input
/// (at least one sentence is always kept).  Sentences are taken in score
/// order until the next one would overflow the budget, then restored to
/// document order.
inline TextVariant summarize(std::string_view text, double target_ratio) {
  if (!(target_ratio > 0.0 && target_ratio <= 1.0))
    throw ContentError("summarize: ratio must be in (0, 1]");
  const auto spans = split_sentences(text);
  if (spans.empty()) throw ContentError("summarize: empty text");

  std::vector<std::size_t> all(spans.size());
  std::iota(all.begin(), all.end(), 0);
  if (target_ratio >= 1.0) return {std::string(text), all, 1.0};

  const auto scores = sentence_scores(text, spans);
  std::vector<std::size_t> order = all;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double budget = target_ratio * static_cast<double>(text.size());
  std::vector<std::size_t> kept;
  double used = 0;
  for (std::size_t idx : order) {
    const double len = static_cast<double>(spans[idx].end - spans[idx].begin);
    const double add = kept.empty() ? len : len + 1.0;  // joining space
    if (used + add > budget) break;
    kept.push_back(idx);
    used += add;
  }
  if (kept.empty()) kept.push_back(order.front());
  std::sort(kept.begin(), kept.end());

  TextVariant v;
  v.sentences = kept;
  for (std::size_t idx : kept) {
    if (!v.text.empty()) v.text += ' ';
    v.text += text.substr(spans[idx].begin, spans[idx].end - spans[idx].begin);
  }
  v.similarity_to_original = similarity(v.text, text);
  return v;
}

}  // namespace flexdoc::content
