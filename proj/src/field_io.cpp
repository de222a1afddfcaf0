#include "lcgf/field_io.hpp"

#include <istream>
#include <ostream>

#include "lcgf/binary_io.hpp"
#include "lcgf/error.hpp"

namespace lcgf {

namespace {

constexpr char kMagic[] = "LCGFFLD1";

void write_header(std::ostream& os, std::uint32_t dim, std::uint32_t side, std::uint64_t seed) {
  os.write(kMagic, 8);
  detail::write_le(os, dim);
  detail::write_le(os, side);
  detail::write_le(os, seed);
}

FieldRecord read_header(std::istream& is) {
  detail::expect_magic(is, kMagic);
  FieldRecord rec;
  rec.dim = detail::read_le<std::uint32_t>(is);
  rec.side = detail::read_le<std::uint32_t>(is);
  rec.seed = detail::read_le<std::uint64_t>(is);
  if (rec.dim < 1 || rec.side < 1) throw InputError("field header has a zero dimension or side");
  return rec;
}

std::size_t volume_of(const FieldRecord& rec) {
  return Shape(static_cast<int>(rec.dim), static_cast<int>(rec.side)).volume();
}

}  // namespace

void write_field_binary(std::ostream& os, const FieldRecord& rec) {
  if (rec.values.size() != volume_of(rec)) throw InputError("field record size mismatch");
  write_header(os, rec.dim, rec.side, rec.seed);
  for (double x : rec.values) detail::write_f64(os, x);
}

void write_field_binary(std::ostream& os, const SampledField& field) {
  write_header(os, static_cast<std::uint32_t>(field.spec.dim), static_cast<std::uint32_t>(field.spec.side),
               field.seed);
  for (double x : field.values) detail::write_f64(os, x);
}

FieldRecord read_field_binary(std::istream& is) {
  FieldRecord rec = read_header(is);
  rec.values.resize(volume_of(rec));
  for (double& x : rec.values) x = detail::read_f64(is);
  return rec;
}

void write_field_csv(std::ostream& os, std::span<const double> values, const Shape& shape) {
  if (values.size() != shape.volume()) throw InputError("field CSV: size mismatch");
  const auto old = os.precision(17);
  for (int i = 0; i < shape.dim(); ++i) os << 'x' << i << ',';
  os << "value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (int c : shape.point(i).coords) os << c << ',';
    os << values[i] << '\n';
  }
  os.precision(old);
}

const std::vector<double>& component(const XiField& xi, XiComponent c) {
  switch (c) {
    case XiComponent::kTotal: return xi.total;
    case XiComponent::kCoarse: return xi.coarse;
    case XiComponent::kBottom: return xi.bottom;
    case XiComponent::kMbrw: return xi.mbrw_part;
    case XiComponent::kCorrection: return xi.correction;
  }
  throw InputError("unknown xi component");
}

void write_xi_binary(std::ostream& os, const XiField& xi) {
  write_header(os, static_cast<std::uint32_t>(xi.params.dim), static_cast<std::uint32_t>(xi.params.side()),
               xi.seed);
  for (std::uint8_t c = 0; c <= 4; ++c) {
    detail::write_le(os, c);
    for (double x : component(xi, static_cast<XiComponent>(c))) detail::write_f64(os, x);
  }
}

std::map<XiComponent, std::vector<double>> read_xi_binary(std::istream& is, FieldRecord* header) {
  const FieldRecord rec = read_header(is);
  if (header) *header = rec;
  const std::size_t volume = volume_of(rec);
  std::map<XiComponent, std::vector<double>> out;
  for (int k = 0; k <= 4; ++k) {
    const auto c = detail::read_le<std::uint8_t>(is);
    if (c > 4) throw InputError("bad xi component index");
    std::vector<double> v(volume);
    for (double& x : v) x = detail::read_f64(is);
    out[static_cast<XiComponent>(c)] = std::move(v);
  }
  return out;
}

}  // namespace lcgf
