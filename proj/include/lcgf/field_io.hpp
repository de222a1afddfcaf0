#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "lcgf/approx.hpp"
#include "lcgf/samplers.hpp"

namespace lcgf {

/// Raw field record: values plus the shape and seed they came from.
struct FieldRecord {
  std::uint32_t dim = 0;
  std::uint32_t side = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

// Binary layout: "LCGFFLD1", u32 d, u32 N, u64 seed, N^d little-endian f64.
void write_field_binary(std::ostream& os, const SampledField& field);
void write_field_binary(std::ostream& os, const FieldRecord& rec);
FieldRecord read_field_binary(std::istream& is);

/// One line per site: x0, ..., x{d-1}, value.
void write_field_csv(std::ostream& os, std::span<const double> values, const Shape& shape);

// Xi export: the field header, then one u8 component index followed by N^d
// f64 per component, for components 0 (total) .. 4 (correction).
void write_xi_binary(std::ostream& os, const XiField& xi);
std::map<XiComponent, std::vector<double>> read_xi_binary(std::istream& is, FieldRecord* header = nullptr);

const std::vector<double>& component(const XiField& xi, XiComponent c);

}  // namespace lcgf
