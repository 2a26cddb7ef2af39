// SPDX-License-Identifier: Apache-2.0
#include "mdreduce/instance_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "mdreduce/errors.hpp"

namespace mdreduce {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

double parse_number(std::string_view tok, int line, const char* what) {
    double v = 0.0;
    const auto* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end) {
        throw ParseError(line, std::string("bad ") + what + " '" + std::string(tok) + "'");
    }
    if (!std::isfinite(v)) {
        throw ParseError(line, std::string(what) + " must be finite");
    }
    return v;
}

long parse_int(std::string_view tok, int line, const char* what) {
    long v = 0;
    const auto* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end) {
        throw ParseError(line, std::string("bad ") + what + " '" + std::string(tok) + "'");
    }
    return v;
}

std::uint64_t parse_u64(std::string_view tok, int line, const char* what) {
    std::uint64_t v = 0;
    const auto* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end) {
        throw ParseError(line, std::string("bad ") + what + " '" + std::string(tok) + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool needs_quotes(std::string_view s) {
    return s.find_first_of(",\"\n") != std::string_view::npos;
}

std::string csv_field(std::string_view s) {
    if (!needs_quotes(s)) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

// Splits one CSV record, honoring quotes. `line` is for error reporting.
std::vector<std::string> split_csv(std::string_view record, int line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    std::size_t i = 0;
    while (i < record.size()) {
        char c = record[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < record.size() && record[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!cur.empty()) {
                throw ParseError(line, "unexpected quote inside unquoted field");
            }
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
        ++i;
    }
    if (quoted) {
        throw ParseError(line, "unterminated quoted field");
    }
    fields.push_back(cur);
    return fields;
}

constexpr std::string_view kResultHeader =
    "seed,method,accum_mode,instance,best_energy,evaluations,converged,"
    "block_syncs,atomic_adds,mma_ops";

} // namespace

LigandInstance parse_instance(std::string_view text) {
    LigandInstance inst;
    bool saw_magic = false;
    bool saw_nrot = false;
    std::vector<int> atom_lines; // for post-validation messages

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto toks = split_ws(line);

        if (!saw_magic) {
            // The magic line must be the first non-empty content.
            if (toks.empty()) {
                if (line_no == 1) {
                    throw ParseError(1, "missing magic line 'MDRI 1'");
                }
                continue;
            }
            if (toks.size() != 2 || toks[0] != "MDRI" || toks[1] != "1") {
                throw ParseError(line_no, "missing magic line 'MDRI 1'");
            }
            saw_magic = true;
            continue;
        }
        if (toks.empty()) {
            continue;
        }

        if (toks[0] == "nrot") {
            if (saw_nrot) {
                throw ParseError(line_no, "duplicate nrot line");
            }
            if (toks.size() != 2) {
                throw ParseError(line_no, "nrot expects one integer");
            }
            const long n = parse_int(toks[1], line_no, "nrot");
            if (n < 0) {
                throw ParseError(line_no, "nrot must be non-negative");
            }
            inst.n_rot = static_cast<int>(n);
            saw_nrot = true;
        } else if (toks[0] == "atom") {
            if (toks.size() != 6) {
                throw ParseError(line_no, "atom expects <x> <y> <z> <weight> <torsion|->");
            }
            Atom a;
            a.pos[0] = parse_number(toks[1], line_no, "atom x");
            a.pos[1] = parse_number(toks[2], line_no, "atom y");
            a.pos[2] = parse_number(toks[3], line_no, "atom z");
            a.weight = parse_number(toks[4], line_no, "atom weight");
            if (a.weight <= 0.0) {
                throw ParseError(line_no, "atom weight must be positive");
            }
            if (toks[5] == "-") {
                a.torsion = -1;
            } else {
                const long t = parse_int(toks[5], line_no, "torsion index");
                if (t < 0) {
                    throw ParseError(line_no, "torsion index must be non-negative or '-'");
                }
                a.torsion = static_cast<int>(t);
            }
            inst.atoms.push_back(a);
            atom_lines.push_back(line_no);
        } else if (toks[0] == "site") {
            if (toks.size() != 6) {
                throw ParseError(line_no, "site expects <x> <y> <z> <depth> <d0>");
            }
            Site s;
            s.pos[0] = parse_number(toks[1], line_no, "site x");
            s.pos[1] = parse_number(toks[2], line_no, "site y");
            s.pos[2] = parse_number(toks[3], line_no, "site z");
            s.depth = parse_number(toks[4], line_no, "site depth");
            s.preferred_distance = parse_number(toks[5], line_no, "site d0");
            if (s.depth <= 0.0) {
                throw ParseError(line_no, "site depth must be positive");
            }
            if (s.preferred_distance <= 0.0) {
                throw ParseError(line_no, "site d0 must be positive");
            }
            inst.sites.push_back(s);
        } else {
            throw ParseError(line_no, "unknown directive '" + std::string(toks[0]) + "'");
        }
    }

    if (!saw_magic) {
        throw ParseError(1, "missing magic line 'MDRI 1'");
    }
    if (!saw_nrot) {
        throw ParseError(line_no, "missing nrot line");
    }
    for (std::size_t i = 0; i < inst.atoms.size(); ++i) {
        if (inst.atoms[i].torsion >= inst.n_rot) {
            throw ParseError(atom_lines[i],
                             "atom references torsion " + std::to_string(inst.atoms[i].torsion) +
                                 " but nrot is " + std::to_string(inst.n_rot));
        }
    }
    if (inst.atoms.empty()) {
        throw ParseError(line_no, "instance needs at least one atom");
    }
    if (inst.sites.empty()) {
        throw ParseError(line_no, "instance needs at least one site");
    }
    return inst;
}

std::string serialize_instance(const LigandInstance& instance) {
    std::ostringstream out;
    out << "MDRI 1\n";
    out << "nrot " << instance.n_rot << "\n";
    for (const Atom& a : instance.atoms) {
        out << "atom " << format_double(a.pos[0]) << ' ' << format_double(a.pos[1]) << ' '
            << format_double(a.pos[2]) << ' ' << format_double(a.weight) << ' ';
        if (a.torsion < 0) {
            out << '-';
        } else {
            out << a.torsion;
        }
        out << '\n';
    }
    for (const Site& s : instance.sites) {
        out << "site " << format_double(s.pos[0]) << ' ' << format_double(s.pos[1]) << ' '
            << format_double(s.pos[2]) << ' ' << format_double(s.depth) << ' '
            << format_double(s.preferred_distance) << '\n';
    }
    return out.str();
}

std::string write_results(std::span<const ResultRow> rows) {
    std::ostringstream out;
    out << kResultHeader << '\n';
    for (const ResultRow& r : rows) {
        out << r.seed << ',' << csv_field(r.method) << ',' << csv_field(r.accum_mode) << ','
            << csv_field(r.instance) << ',' << format_double(r.best_energy) << ','
            << r.evaluations << ',' << (r.converged ? "true" : "false") << ','
            << r.block_syncs << ',' << r.atomic_adds << ',' << r.mma_ops << '\n';
    }
    return out.str();
}

std::vector<ResultRow> parse_results(std::string_view csv) {
    std::vector<ResultRow> rows;
    int line_no = 0;
    std::size_t pos = 0;
    bool saw_header = false;
    while (pos < csv.size()) {
        // A record ends at the first newline outside quotes; quoted fields
        // may span physical lines. Errors report the record's first line.
        ++line_no;
        const int record_line = line_no;
        bool quoted = false;
        std::size_t end = pos;
        while (end < csv.size()) {
            const char c = csv[end];
            if (c == '"') {
                quoted = !quoted;
            } else if (c == '\n') {
                if (!quoted) {
                    break;
                }
                ++line_no;
            }
            ++end;
        }
        const std::string_view line = csv.substr(pos, end - pos);
        pos = end == csv.size() ? csv.size() : end + 1;
        if (line.empty()) {
            continue;
        }
        if (!saw_header) {
            if (line != kResultHeader) {
                throw ParseError(record_line, "unexpected results header");
            }
            saw_header = true;
            continue;
        }
        const auto f = split_csv(line, record_line);
        if (f.size() != 10) {
            throw ParseError(record_line,
                             "expected 10 fields, got " + std::to_string(f.size()));
        }
        ResultRow r;
        r.seed = parse_u64(f[0], record_line, "seed");
        r.method = f[1];
        r.accum_mode = f[2];
        r.instance = f[3];
        r.best_energy = parse_number(f[4], record_line, "best_energy");
        r.evaluations = parse_int(f[5], record_line, "evaluations");
        if (f[6] == "true") {
            r.converged = true;
        } else if (f[6] == "false") {
            r.converged = false;
        } else {
            throw ParseError(record_line, "bad converged flag '" + f[6] + "'");
        }
        r.block_syncs = parse_u64(f[7], record_line, "block_syncs");
        r.atomic_adds = parse_u64(f[8], record_line, "atomic_adds");
        r.mma_ops = parse_u64(f[9], record_line, "mma_ops");
        rows.push_back(r);
    }
    if (!saw_header) {
        throw ParseError(1, "missing results header");
    }
    return rows;
}

} // namespace mdreduce
