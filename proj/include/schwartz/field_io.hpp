#pragma once

// Binary and CSV serialization of fields.
//
// Binary layout (little-endian): u64 n, u64 m, u64 P[n], f64 L[n], f64 t, then m·ΠP doubles,
// component by component, each component row-major with the first axis slowest.

#include "schwartz/grid.hpp"

#include <iosfwd>
#include <string>

namespace schwartz {

void write_field_binary(const Field& f, std::ostream& os);
void write_field_binary(const Field& f, const std::string& path);
/// periodic_native is not part of the layout; the caller states it.
Field read_field_binary(std::istream& is, bool periodic_native = false);
Field read_field_binary(const std::string& path, bool periodic_native = false);

/// 1D: columns x, c0..; 2D: x, y, c0..; 3D: the plane at index `slice` of the last axis.
void write_field_csv(const Field& f, std::ostream& os, int slice = -1);
void write_field_csv(const Field& f, const std::string& path, int slice = -1);

} // namespace schwartz
