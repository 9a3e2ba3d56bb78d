#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rdmix/assembly.hpp"
#include "rdmix/dofs.hpp"
#include "rdmix/error.hpp"
#include "rdmix/mesh.hpp"

namespace rdmix {

// ---------------------------------------------------------------------------------------
// CSV (RFC 4180)
// ---------------------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        RDMIX_REQUIRE(it != header.end(), Error, "csv: no column '" + name + "'");
        return static_cast<int>(it - header.begin());
    }
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
    char buf[32];
    for (int p = 6; p <= 17; ++p) {
        std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline void write_csv(std::ostream& out, const CsvTable& table) {
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_field(r[i]);
        out << "\r\n";
    };
    line(table.header);
    for (const auto& r : table.rows) {
        RDMIX_REQUIRE(r.size() == table.header.size(), Error, "csv: record width does not match the header");
        line(r);
    }
}

inline void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    RDMIX_REQUIRE(out.good(), Error, "cannot write '" + path + "'");
    write_csv(out, table);
    RDMIX_REQUIRE(out.good(), Error, "write failed for '" + path + "'");
}

inline CsvTable parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            rec.push_back(field);
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            rec.push_back(field);
            records.push_back(rec);
            rec.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    RDMIX_REQUIRE(!quoted, ParseError, "csv: unterminated quoted field");
    if (any || !field.empty()) {
        rec.push_back(field);
        records.push_back(rec);
    }
    RDMIX_REQUIRE(!records.empty(), ParseError, "csv: no header row");
    CsvTable t;
    t.header = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        RDMIX_REQUIRE(records[r].size() == t.header.size(), ParseError,
                      "csv: record " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                          " fields, header has " + std::to_string(t.header.size()));
        t.rows.push_back(records[r]);
    }
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    RDMIX_REQUIRE(in.good(), Error, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

// ---------------------------------------------------------------------------------------
// Legacy VTK
// ---------------------------------------------------------------------------------------

struct VtkField {
    std::string name;
    const Vector* m = nullptr;  // mass coefficients
    const Vector* h = nullptr;  // flux coefficients (may be null)
};

/// Every triangle is split into s^2 sub-triangles (s = max(local mass order, 1)); point data
/// are the discrete fields at the sub-triangle corners, cell data the region, the local
/// order and the indicator of the parent element.
inline void write_vtk(std::ostream& out, const Mesh& mesh, const DofMap& dofs, const std::vector<VtkField>& fields,
                      const std::vector<double>& eta = {}) {
    std::vector<Point> ref_pts;
    std::vector<int> parent_pt;
    std::vector<std::array<int, 3>> cells;
    std::vector<int> parent_cell;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const int s = std::max(dofs.mass_order(k), 1);
        const int base = static_cast<int>(ref_pts.size());
        auto id = [&](int i, int j) { return base + j * (s + 1) - j * (j - 1) / 2 + i; };
        for (int j = 0; j <= s; ++j)
            for (int i = 0; i + j <= s; ++i) {
                ref_pts.push_back({static_cast<double>(i) / s, static_cast<double>(j) / s});
                parent_pt.push_back(k);
            }
        for (int j = 0; j < s; ++j)
            for (int i = 0; i + j < s; ++i) {
                cells.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
                parent_cell.push_back(k);
                if (i + j + 1 < s) {
                    cells.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
                    parent_cell.push_back(k);
                }
            }
    }
    out << "# vtk DataFile Version 3.0\nrdmix\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << ref_pts.size() << " double\n";
    for (std::size_t p = 0; p < ref_pts.size(); ++p) {
        const Point x = mesh.to_physical(parent_pt[p], ref_pts[p]);
        out << format_number(x.x) << ' ' << format_number(x.y) << " 0\n";
    }
    out << "CELLS " << cells.size() << ' ' << 4 * cells.size() << '\n';
    for (const auto& c : cells) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
    out << "CELL_TYPES " << cells.size() << '\n';
    for (std::size_t c = 0; c < cells.size(); ++c) out << "5\n";
    out << "CELL_DATA " << cells.size() << '\n';
    out << "SCALARS region int 1\nLOOKUP_TABLE default\n";
    for (int k : parent_cell) out << mesh.element(k).region << '\n';
    out << "SCALARS order int 1\nLOOKUP_TABLE default\n";
    for (int k : parent_cell) out << dofs.mass_order(k) << '\n';
    if (!eta.empty()) {
        out << "SCALARS eta double 1\nLOOKUP_TABLE default\n";
        for (int k : parent_cell) out << format_number(eta[k]) << '\n';
    }
    out << "POINT_DATA " << ref_pts.size() << '\n';
    for (const auto& f : fields) {
        out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
        for (std::size_t p = 0; p < ref_pts.size(); ++p)
            out << format_number(eval_mass(dofs, *f.m, parent_pt[p], ref_pts[p])) << '\n';
        if (f.h) {
            out << "VECTORS flux_" << f.name << " double\n";
            for (std::size_t p = 0; p < ref_pts.size(); ++p) {
                const Point v = eval_flux(mesh, dofs, *f.h, parent_pt[p], ref_pts[p]);
                out << format_number(v.x) << ' ' << format_number(v.y) << " 0\n";
            }
        }
    }
}

inline void write_vtk(const std::string& path, const Mesh& mesh, const DofMap& dofs,
                      const std::vector<VtkField>& fields, const std::vector<double>& eta = {}) {
    std::ofstream out(path);
    RDMIX_REQUIRE(out.good(), Error, "cannot write '" + path + "'");
    write_vtk(out, mesh, dofs, fields, eta);
    RDMIX_REQUIRE(out.good(), Error, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------------------
// Wavefront
// ---------------------------------------------------------------------------------------

/// Furthest coordinate along `axis` ('x' or 'y') at which m crosses `level`, searched on
/// `lines` sampling lines parallel to the axis. Inside an element the crossing is located by
/// bisection on the polynomial trace; a crossing between two elements is placed on their
/// common boundary.
inline double track_wavefront(const Mesh& mesh, const DofMap& dofs, const Vector& m, double level, char axis = 'x',
                              int lines = 9, int samples = 16) {
    RDMIX_REQUIRE(axis == 'x' || axis == 'y', Error, "track_wavefront: axis must be x or y");
    const Box bb = mesh.bounding_box();
    const bool ax = axis == 'x';
    const double lo = ax ? bb.ymin : bb.xmin, hi = ax ? bb.ymax : bb.xmax;
    auto along = [&](Point p) { return ax ? p.x : p.y; };
    auto across = [&](Point p) { return ax ? p.y : p.x; };
    bool found = false;
    double best = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < lines; ++l) {
        const double c = lo + (hi - lo) * (l + 0.5 + 0.0123456) / lines;
        struct Sample {
            double s, v;
            int k;
        };
        std::vector<Sample> pts;
        for (int k = 0; k < mesh.num_elements(); ++k) {
            const auto cr = mesh.corners(k);
            double smin = std::numeric_limits<double>::infinity(), smax = -smin;
            for (int i = 0; i < 3; ++i) {
                const Point a = cr[i], b = cr[(i + 1) % 3];
                const double ca = across(a) - c, cb = across(b) - c;
                if ((ca < 0.0) == (cb < 0.0) || ca == cb) continue;
                const double t = ca / (ca - cb);
                const double s = along(a) + t * (along(b) - along(a));
                smin = std::min(smin, s);
                smax = std::max(smax, s);
            }
            if (!(smax > smin)) continue;
            auto value = [&](double s) {
                const Point p = ax ? Point{s, c} : Point{c, s};
                return eval_mass(dofs, m, k, mesh.to_reference(k, p)) - level;
            };
            std::vector<double> ss(static_cast<std::size_t>(samples) + 1), vs(ss.size());
            for (int j = 0; j <= samples; ++j) {
                ss[j] = smin + (smax - smin) * j / samples;
                vs[j] = value(ss[j]);
                pts.push_back({ss[j], vs[j], k});
            }
            for (int j = 0; j < samples; ++j) {
                if (vs[j] == 0.0 || (vs[j] < 0.0) != (vs[j + 1] < 0.0)) {
                    double a = ss[j], b = ss[j + 1], fa = vs[j];
                    for (int it = 0; it < 60 && fa != 0.0; ++it) {
                        const double mid = 0.5 * (a + b);
                        const double fm = value(mid);
                        if ((fm < 0.0) == (fa < 0.0)) {
                            a = mid;
                            fa = fm;
                        } else {
                            b = mid;
                        }
                    }
                    best = std::max(best, fa == 0.0 ? a : 0.5 * (a + b));
                    found = true;
                }
            }
        }
        // jumps between elements: only samples sitting on the same shared boundary point
        std::sort(pts.begin(), pts.end(), [](const Sample& a, const Sample& b) { return a.s < b.s; });
        const double tol = 1e-9 * ((ax ? bb.xmax - bb.xmin : bb.ymax - bb.ymin) + 1.0);
        for (std::size_t j = 0; j + 1 < pts.size(); ++j)
            if (pts[j].k != pts[j + 1].k && pts[j + 1].s - pts[j].s <= tol &&
                (pts[j].v < 0.0) != (pts[j + 1].v < 0.0)) {
                best = std::max(best, 0.5 * (pts[j].s + pts[j + 1].s));
                found = true;
            }
    }
    RDMIX_REQUIRE(found, Error, "track_wavefront: level " + format_number(level) + " is not attained");
    return best;
}

} // namespace rdmix
