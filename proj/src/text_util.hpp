#pragma once

#include <string>
#include <vector>

namespace dmsrec {

// Trims ASCII whitespace at both ends and collapses internal runs to one
// space. Applied to every title at ingest so later string matching is stable.
std::string normalize_title(const std::string& s);

// normalize_title + ASCII casefold. The comparison key for intent
// classification (explicit iff key matches a session title key).
std::string match_key(const std::string& s);

// Lowercased alphanumeric tokens; everything else separates.
std::vector<std::string> tokenize(const std::string& s);

bool starts_with(const std::string& s, const std::string& prefix);

std::string lowercase(const std::string& s);

}  // namespace dmsrec
