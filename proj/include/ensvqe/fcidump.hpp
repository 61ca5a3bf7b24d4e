#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fermion.hpp"

namespace ensvqe {

namespace detail {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline int header_int(const std::string& header, const char* key, int fallback) {
    const std::regex re(std::string(key) + R"(\s*=\s*(-?\d+))", std::regex::icase);
    std::smatch m;
    if (std::regex_search(header, m, re)) return std::stoi(m[1].str());
    return fallback;
}

}  // namespace detail

/// Parses the FCIDUMP layout: a namelist header (`&FCI ... &END` or `/`)
/// followed by `value i j k l` lines with 1-based orbital indices.
inline MolecularIntegrals parse_fcidump(std::istream& in) {
    std::string line;
    std::string header;
    std::size_t lineno = 0;
    bool header_done = false;
    while (std::getline(in, line)) {
        ++lineno;
        header += line + ' ';
        std::string upper = line;
        for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        const auto first = upper.find_first_not_of(" \t\r");
        if (upper.find("&END") != std::string::npos ||
            (first != std::string::npos && upper.compare(first, 1, "/") == 0)) {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw ParseError("FCIDUMP header not terminated by &END or /", lineno);
    const int norb = detail::header_int(header, "NORB", -1);
    if (norb < 1) throw ParseError("FCIDUMP header lacks a positive NORB", lineno);

    MolecularIntegrals ints = MolecularIntegrals::zeros(norb);
    ints.electrons = detail::header_int(header, "NELEC", 0);
    ints.ms2 = detail::header_int(header, "MS2", 0);

    std::vector<char> g_set(static_cast<std::size_t>(norb) * norb * norb * norb, 0);
    std::vector<char> h_set(static_cast<std::size_t>(norb) * norb, 0);
    auto g_flag = [&](int p, int q, int r, int s) -> char& {
        return g_set[((static_cast<std::size_t>(p) * norb + q) * norb + r) * norb + s];
    };
    constexpr double dup_tol = 1e-10;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string vtok;
        long idx[4];
        if (!(ls >> vtok >> idx[0] >> idx[1] >> idx[2] >> idx[3])) {
            throw ParseError("expected `value i j k l`", lineno);
        }
        std::string extra;
        if (ls >> extra) throw ParseError("trailing token '" + extra + "'", lineno);
        for (auto& c : vtok) if (c == 'D' || c == 'd') c = 'e';
        char* end = nullptr;
        const double v = std::strtod(vtok.c_str(), &end);
        if (end == vtok.c_str() || *end != '\0' || !std::isfinite(v)) {
            throw ParseError("invalid value '" + vtok + "'", lineno);
        }
        for (long i : idx) {
            if (i < 0 || i > norb) throw ParseError("orbital index out of range", lineno);
        }
        const int i = static_cast<int>(idx[0]) - 1, j = static_cast<int>(idx[1]) - 1;
        const int k = static_cast<int>(idx[2]) - 1, l = static_cast<int>(idx[3]) - 1;

        if (idx[0] && idx[1] && idx[2] && idx[3]) {
            for (auto [a, b, c, d] : TwoBodyTensor::orbit(i, j, k, l)) {
                char& f = g_flag(a, b, c, d);
                if (f && std::abs(ints.two_body(a, b, c, d) - v) > dup_tol) {
                    throw ValidationError("FCIDUMP line " + std::to_string(lineno) +
                                          ": two-body entry conflicts with a symmetry-equivalent entry");
                }
                ints.two_body(a, b, c, d) = v;
                f = 1;
            }
        } else if (idx[0] && idx[1] && !idx[2] && !idx[3]) {
            for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
                char& f = h_set[static_cast<std::size_t>(a) * norb + b];
                if (f && std::abs(ints.one_body(a, b) - v) > dup_tol) {
                    throw ValidationError("FCIDUMP line " + std::to_string(lineno) +
                                          ": one-body entry conflicts with its transpose");
                }
                ints.one_body(a, b) = v;
                f = 1;
            }
        } else if (!idx[0] && !idx[1] && !idx[2] && !idx[3]) {
            ints.core_energy = v;
        } else if (idx[0] && !idx[1] && !idx[2] && !idx[3]) {
            // orbital energy: not needed
        } else {
            throw ParseError("unsupported index pattern", lineno);
        }
    }
    return ints;
}

inline MolecularIntegrals read_fcidump(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open FCIDUMP file: " + path);
    return parse_fcidump(f);
}

/// Writes unique nonzero entries (i>=j, k>=l, ij>=kl) with round-trip precision.
inline void write_fcidump(std::ostream& out, const MolecularIntegrals& ints) {
    const int n = ints.orbital_count;
    out << " &FCI NORB=" << n << ",NELEC=" << ints.electrons << ",MS2=" << ints.ms2 << ",\n  ORBSYM=";
    for (int i = 0; i < n; ++i) out << "1,";
    out << "\n  ISYM=1,\n &END\n";
    auto emit = [&](double v, int a, int b, int c, int d) {
        out << detail::format_real(v) << ' ' << a << ' ' << b << ' ' << c << ' ' << d << '\n';
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l <= k; ++l) {
                    if (i * (i + 1) / 2 + j < k * (k + 1) / 2 + l) continue;
                    const double v = ints.two_body(i, j, k, l);
                    if (v != 0.0) emit(v, i + 1, j + 1, k + 1, l + 1);
                }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            if (ints.one_body(i, j) != 0.0) emit(ints.one_body(i, j), i + 1, j + 1, 0, 0);
    emit(ints.core_energy, 0, 0, 0, 0);
}

inline void write_fcidump(const std::string& path, const MolecularIntegrals& ints) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write FCIDUMP file: " + path);
    write_fcidump(f, ints);
}

}  // namespace ensvqe
