// pauli.hpp — Pauli matrices and n-qubit tensor-product assembly.
#pragma once

#include <qms/types.hpp>

#include <string>
#include <vector>

namespace qms {

inline Mat pauli_i() { return Mat::Identity(2, 2); }

inline Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Mat pauli_y() {
    Mat m(2, 2);
    m << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
    return m;
}

inline Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline Mat pauli_from_char(char c) {
    switch (c) {
        case 'I': return pauli_i();
        case 'X': return pauli_x();
        case 'Y': return pauli_y();
        case 'Z': return pauli_z();
        default: throw std::invalid_argument(std::string("pauli_from_char: unknown label ") + c);
    }
}

// Pauli string like "XIZ" on n qubits; index 0 is the leftmost tensor factor.
inline Mat pauli_string(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("pauli_string: empty label");
    Mat m = pauli_from_char(s[0]);
    for (std::size_t i = 1; i < s.size(); ++i) m = kron(m, pauli_from_char(s[i]));
    return m;
}

// Single-site operator op acting on qubit `site` of an n-qubit register.
inline Mat single_site(const Mat& op, int site, int n) {
    if (site < 0 || site >= n) throw std::invalid_argument("single_site: site out of range");
    Mat m = (site == 0) ? op : Mat(Mat::Identity(2, 2));
    for (int i = 1; i < n; ++i) m = kron(m, (i == site) ? op : Mat(Mat::Identity(2, 2)));
    return m;
}

// All length-n Pauli strings over a fixed alphabet, in lexicographic order.
inline std::vector<std::string> pauli_labels(int n) {
    std::vector<std::string> out{""};
    for (int q = 0; q < n; ++q) {
        std::vector<std::string> next;
        next.reserve(out.size() * 4);
        for (const auto& p : out)
            for (char c : {'I', 'X', 'Y', 'Z'}) next.push_back(p + c);
        out = std::move(next);
    }
    return out;
}

}  // namespace qms
