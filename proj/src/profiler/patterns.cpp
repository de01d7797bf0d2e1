#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "mci/profiler.hpp"
#include "mci/util.hpp"

namespace mci::profile {

std::string to_string(RelationKind k) { return k == RelationKind::Duplicate ? "Duplicate" : "Similar"; }

std::string to_string(Cardinality c) {
    switch (c) {
        case Cardinality::OneToOne: return "OneToOne";
        case Cardinality::NToOne: return "NToOne";
        case Cardinality::OneToN: return "OneToN";
        case Cardinality::NToM: return "NToM";
        case Cardinality::Unknown: return "Unknown";
    }
    return "Unknown";
}

std::string to_string(ContextMode m) { return m == ContextMode::Complete ? "complete" : "partial"; }

RelationKind relation_kind_from_string(std::string_view s) {
    if (s == "Duplicate") return RelationKind::Duplicate;
    if (s == "Similar") return RelationKind::Similar;
    throw Error("unknown relation kind '" + std::string(s) + "'");
}

Cardinality cardinality_from_string(std::string_view s) {
    for (auto c : {Cardinality::OneToOne, Cardinality::NToOne, Cardinality::OneToN, Cardinality::NToM,
                   Cardinality::Unknown})
        if (to_string(c) == s) return c;
    throw Error("unknown cardinality '" + std::string(s) + "'");
}

ContextMode context_mode_from_string(std::string_view s) {
    std::string l = util::to_lower(s);
    if (l == "complete") return ContextMode::Complete;
    if (l == "partial") return ContextMode::Partial;
    throw ConfigError("unknown context mode '" + std::string(s) + "'");
}

std::string abstract_pattern(std::string_view value) {
    std::string out;
    out.reserve(value.size());
    for (char ch : value) {
        auto c = static_cast<unsigned char>(ch);
        char mapped;
        if (c < 0x80 && std::isupper(c)) mapped = 'A';
        else if (c < 0x80 && std::islower(c)) mapped = 'a';
        else if (c < 0x80 && std::isdigit(c)) mapped = '9';
        else {
            out.push_back(ch);
            continue;
        }
        if (!out.empty() && out.back() == mapped) continue;
        out.push_back(mapped);
    }
    return out;
}

std::vector<std::pair<std::string, long long>> mine_patterns(const std::vector<std::string>& values,
                                                             std::size_t cap, std::uint64_t seed) {
    Reservoir<const std::string*> sample(cap, seed);
    for (const auto& v : values) sample.offer(&v);

    std::unordered_map<std::string, long long> counts;
    for (const auto* v : sample.items()) ++counts[abstract_pattern(*v)];

    std::vector<std::pair<std::string, long long>> out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    return out;
}

Affinity type_affinity(std::string_view declared_type) {
    std::string t = util::to_upper(declared_type);
    if (t.find("INT") != std::string::npos) return Affinity::Integer;
    if (t.find("CHAR") != std::string::npos || t.find("CLOB") != std::string::npos ||
        t.find("TEXT") != std::string::npos)
        return Affinity::Text;
    if (t.empty() || t.find("BLOB") != std::string::npos) return Affinity::Blob;
    if (t.find("REAL") != std::string::npos || t.find("FLOA") != std::string::npos ||
        t.find("DOUB") != std::string::npos)
        return Affinity::Real;
    return Affinity::Numeric;
}

}  // namespace mci::profile
