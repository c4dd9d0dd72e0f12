#include <cctype>

#include "fhirqa/meteor.hpp"

namespace fhirqa {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    const auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    while (i < text.size()) {
        while (i < text.size() && space(text[i])) ++i;
        std::size_t end = i;
        while (end < text.size() && !space(text[end])) ++end;
        std::size_t b = i;
        std::size_t e = end;
        while (b < e && punct(text[b])) ++b;
        while (e > b && punct(text[e - 1])) --e;
        if (b < e) {
            std::string tok(text.substr(b, e - b));
            for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.push_back(std::move(tok));
        }
        i = end;
    }
    return out;
}

}  // namespace fhirqa
