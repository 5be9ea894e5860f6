#pragma once
// Fixed word lists used by the tokenizer and sentence splitter.  Changing
// either list changes similarity values, so bump kLexiconVersion with it.

#include <algorithm>
#include <iterator>
#include <string_view>

namespace flexdoc::content {

inline constexpr int kLexiconVersion = 1;

inline constexpr std::string_view kStopWords[] = {
    "a",       "about",  "above",  "after",   "again",   "against", "all",     "am",
    "an",      "and",    "any",    "are",     "as",      "at",      "be",      "because",
    "been",    "before", "being",  "below",   "between", "both",    "but",     "by",
    "can",     "could",  "did",    "do",      "does",    "doing",   "down",    "during",
    "each",    "few",    "for",    "from",    "further", "had",     "has",     "have",
    "having",  "he",     "her",    "here",    "hers",    "herself", "him",     "himself",
    "his",     "how",    "i",      "if",      "in",      "into",    "is",      "it",
    "its",     "itself", "just",   "me",      "more",    "most",    "my",      "myself",
    "no",      "nor",    "not",    "now",     "of",      "off",     "on",      "once",
    "only",    "or",     "other",  "our",     "ours",    "ourselves", "out",   "over",
    "own",     "same",   "she",    "should",  "so",      "some",    "such",    "than",
    "that",    "the",    "their",  "theirs",  "them",    "themselves", "then", "there",
    "these",   "they",   "this",   "those",   "through", "to",      "too",     "under",
    "until",   "up",     "very",   "was",     "we",      "were",    "what",    "when",
    "where",   "which",  "while",  "who",     "whom",    "why",     "will",    "with",
    "would",   "you",    "your",   "yours",   "yourself", "yourselves", "also",
};

// Lowercase, without the trailing period.
inline constexpr std::string_view kAbbreviations[] = {
    "al",   "approx", "ca",  "cf",   "co",   "corp", "dept", "dr",
    "e.g",  "eq",     "etc", "fig",  "i.e",  "inc",  "jr",   "ltd",
    "mr",   "mrs",    "ms",  "no",   "prof", "sr",   "st",   "vs",
};

inline bool is_stop_word(std::string_view w) {
  return std::find(std::begin(kStopWords), std::end(kStopWords), w) != std::end(kStopWords);
}

inline bool is_abbreviation(std::string_view w) {
  return std::find(std::begin(kAbbreviations), std::end(kAbbreviations), w) !=
         std::end(kAbbreviations);
}

}  // namespace flexdoc::content
