#pragma once

#include <string>
#include <string_view>

namespace fhirqa {

/// Porter (1980) stemmer, reference-implementation behaviour. Expects a
/// lowercase token; words of one or two letters are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace fhirqa
