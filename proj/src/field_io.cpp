#include "schwartz/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace schwartz {

namespace {

static_assert(std::endian::native == std::endian::little,
              "field serialization assumes a little-endian host");

void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) throw std::runtime_error("truncated field header");
    return v;
}

double get_f64(std::istream& is) {
    double v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) throw std::runtime_error("truncated field header");
    return v;
}

} // namespace

void write_field_binary(const Field& f, std::ostream& os) {
    const Grid& g = f.grid();
    put_u64(os, static_cast<std::uint64_t>(g.dim()));
    put_u64(os, static_cast<std::uint64_t>(f.components()));
    for (int i = 0; i < g.dim(); ++i) put_u64(os, static_cast<std::uint64_t>(g.points(i)));
    for (int i = 0; i < g.dim(); ++i) put_f64(os, g.half_width(i));
    put_f64(os, f.time());
    auto d = f.data();
    os.write(reinterpret_cast<const char*>(d.data()),
             static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!os) throw std::runtime_error("failed writing field");
}

void write_field_binary(const Field& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_field_binary(f, os);
}

Field read_field_binary(std::istream& is, bool periodic_native) {
    const auto n = static_cast<int>(get_u64(is));
    const auto m = static_cast<int>(get_u64(is));
    if (n < 1 || n > kMaxDim || m < 1 || m > 64) throw std::runtime_error("bad field header");
    std::array<int, kMaxDim> P{};
    std::array<double, kMaxDim> L{};
    for (int i = 0; i < n; ++i) P[i] = static_cast<int>(get_u64(is));
    for (int i = 0; i < n; ++i) L[i] = get_f64(is);
    const double t = get_f64(is);
    Grid g = make_grid(n, std::span<const double>(L.data(), n), std::span<const int>(P.data(), n),
                       periodic_native);
    std::vector<double> data(static_cast<std::size_t>(m) * g.size());
    if (!is.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double))))
        throw std::runtime_error("truncated field data");
    return Field(g, m, std::move(data), t);
}

Field read_field_binary(const std::string& path, bool periodic_native) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_field_binary(is, periodic_native);
}

void write_field_csv(const Field& f, std::ostream& os, int slice) {
    const Grid& g = f.grid();
    const int n = g.dim();
    const int m = f.components();
    os << std::setprecision(17);
    os << "x";
    if (n >= 2) os << ",y";
    for (int c = 0; c < m; ++c) os << ",c" << c;
    os << "\n";
    const int P0 = g.points(0);
    const int P1 = n >= 2 ? g.points(1) : 1;
    int k = 0;
    if (n == 3) {
        k = slice < 0 ? g.points(2) / 2 : slice;
        if (k >= g.points(2)) throw std::out_of_range("csv slice index");
    }
    const int P2 = n == 3 ? g.points(2) : 1;
    for (int a = 0; a < P0; ++a)
        for (int b = 0; b < P1; ++b) {
            const std::size_t idx = (static_cast<std::size_t>(a) * P1 + b) * P2 + k;
            os << g.coords(0)[a];
            if (n >= 2) os << "," << g.coords(1)[b];
            for (int c = 0; c < m; ++c) os << "," << f.component(c)[idx];
            os << "\n";
        }
}

void write_field_csv(const Field& f, const std::string& path, int slice) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_field_csv(f, os, slice);
}

} // namespace schwartz
