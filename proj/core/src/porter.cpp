#include "fhirqa/porter.hpp"

namespace fhirqa {
namespace {

// Direct transcription of the reference C stemmer: b[0..k] is the word being
// stemmed, j marks the end of the stem once ends() has matched a suffix.
class Stemmer {
public:
    explicit Stemmer(std::string_view w) : b_(w), k_(static_cast<int>(w.size()) - 1) {}

    std::string run() {
        if (k_ <= 1) return b_;
        step1ab();
        if (k_ > 0) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_.substr(0, static_cast<std::size_t>(k_ + 1));
    }

private:
    bool cons(int i) const {
        switch (b_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !cons(i - 1);
            default:
                return true;
        }
    }

    // Number of VC sequences in b[0..j].
    int m() const {
        int n = 0;
        int i = 0;
        for (;;) {
            if (i > j_) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        for (;;) {
            for (;;) {
                if (i > j_) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            for (;;) {
                if (i > j_) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j_; ++i) {
            if (!cons(i)) return true;
        }
        return false;
    }

    bool doublec(int j) const { return j >= 1 && b_[j] == b_[j - 1] && cons(j); }

    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        const char ch = b_[i];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s) {
        const int len = static_cast<int>(s.size());
        if (len > k_ + 1) return false;
        if (std::string_view(b_).substr(static_cast<std::size_t>(k_ - len + 1), s.size()) != s) return false;
        j_ = k_ - len;
        return true;
    }

    void setto(std::string_view s) {
        b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
        k_ = j_ + static_cast<int>(s.size());
    }

    void r(std::string_view s) {
        if (m() > 0) setto(s);
    }

    void step1ab() {
        if (b_[k_] == 's') {
            if (ends("sses")) {
                k_ -= 2;
            } else if (ends("ies")) {
                setto("i");
            } else if (b_[k_ - 1] != 's') {
                --k_;
            }
        }
        if (ends("eed")) {
            if (m() > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            if (ends("at")) {
                setto("ate");
            } else if (ends("bl")) {
                setto("ble");
            } else if (ends("iz")) {
                setto("ize");
            } else if (doublec(k_)) {
                --k_;
                const char ch = b_[k_];
                if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
            } else if (m() == 1 && cvc(k_)) {
                setto("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[k_] = 'i';
    }

    // Tries each (suffix, replacement) in order; the first suffix that matches
    // ends the search whether or not the measure allows the replacement.
    template <std::size_t N>
    void replace_first(const std::pair<std::string_view, std::string_view> (&rules)[N]) {
        for (const auto& [suffix, repl] : rules) {
            if (ends(suffix)) {
                r(repl);
                return;
            }
        }
    }

    void step2() {
        using R = std::pair<std::string_view, std::string_view>;
        switch (b_[k_ - 1]) {
            case 'a': { static const R t[] = {{"ational", "ate"}, {"tional", "tion"}}; replace_first(t); break; }
            case 'c': { static const R t[] = {{"enci", "ence"}, {"anci", "ance"}}; replace_first(t); break; }
            case 'e': { static const R t[] = {{"izer", "ize"}}; replace_first(t); break; }
            case 'l': {
                static const R t[] = {{"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}};
                replace_first(t);
                break;
            }
            case 'o': { static const R t[] = {{"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}}; replace_first(t); break; }
            case 's': {
                static const R t[] = {{"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}};
                replace_first(t);
                break;
            }
            case 't': { static const R t[] = {{"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}}; replace_first(t); break; }
            case 'g': { static const R t[] = {{"logi", "log"}}; replace_first(t); break; }
            default: break;
        }
    }

    void step3() {
        using R = std::pair<std::string_view, std::string_view>;
        switch (b_[k_]) {
            case 'e': { static const R t[] = {{"icate", "ic"}, {"ative", ""}, {"alize", "al"}}; replace_first(t); break; }
            case 'i': { static const R t[] = {{"iciti", "ic"}}; replace_first(t); break; }
            case 'l': { static const R t[] = {{"ical", "ic"}, {"ful", ""}}; replace_first(t); break; }
            case 's': { static const R t[] = {{"ness", ""}}; replace_first(t); break; }
            default: break;
        }
    }

    bool ends_any(std::initializer_list<std::string_view> suffixes) {
        for (auto s : suffixes) {
            if (ends(s)) return true;
        }
        return false;
    }

    void step4() {
        bool found = false;
        switch (b_[k_ - 1]) {
            case 'a': found = ends_any({"al"}); break;
            case 'c': found = ends_any({"ance", "ence"}); break;
            case 'e': found = ends_any({"er"}); break;
            case 'i': found = ends_any({"ic"}); break;
            case 'l': found = ends_any({"able", "ible"}); break;
            case 'n': found = ends_any({"ant", "ement", "ment", "ent"}); break;
            case 'o':
                found = (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) || ends("ou");
                break;
            case 's': found = ends_any({"ism"}); break;
            case 't': found = ends_any({"ate", "iti"}); break;
            case 'u': found = ends_any({"ous"}); break;
            case 'v': found = ends_any({"ive"}); break;
            case 'z': found = ends_any({"ize"}); break;
            default: break;
        }
        if (found && m() > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (b_[k_] == 'e') {
            const int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (b_[k_] == 'l' && doublec(k_) && m() > 1) --k_;
    }

    std::string b_;
    int k_;
    int j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) { return Stemmer(word).run(); }

}  // namespace fhirqa
