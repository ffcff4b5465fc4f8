#include <stdexcept>

#include "pinfield/green.hpp"

namespace pinfield {

Region::Region(const StepKernel& kernel, const Box& box)
    : kernel_(std::make_shared<const StepKernel>(kernel)), box_(box) {
  if (box.dim() != kernel.dim()) throw std::invalid_argument("Region: box/kernel dimension mismatch");
  slot_of_.assign(box_.size(), 0);
  rebuild_sites();
}

Region Region::centered_box(const StepKernel& kernel, int radius) {
  return Region(kernel, Box::centered(kernel.dim(), radius));
}

void Region::rebuild_sites() {
  sites_.clear();
  for (std::size_t i = 0; i < box_.size(); ++i) {
    if (slot_of_[i] < 0) continue;
    slot_of_[i] = static_cast<std::int32_t>(sites_.size());
    sites_.push_back(box_.point(i));
  }
}

bool Region::alive(const Point& x) const {
  return box_.contains(x) && slot_of_[box_.index(x)] >= 0;
}

std::optional<std::size_t> Region::slot(const Point& x) const {
  if (!box_.contains(x)) return std::nullopt;
  const auto s = slot_of_[box_.index(x)];
  if (s < 0) return std::nullopt;
  return static_cast<std::size_t>(s);
}

Region Region::with_dead(std::span<const Point> dead) const {
  Region r = *this;
  for (const auto& p : dead) {
    if (box_.contains(p)) r.slot_of_[box_.index(p)] = -1;
  }
  r.rebuild_sites();
  return r;
}

Region Region::keep_slots(std::span<const std::size_t> slots) const {
  Region r = *this;
  std::fill(r.slot_of_.begin(), r.slot_of_.end(), -1);
  for (auto s : slots) {
    if (s >= sites_.size()) throw std::out_of_range("Region::keep_slots: slot out of range");
    r.slot_of_[box_.index(sites_[s])] = 0;
  }
  r.rebuild_sites();
  return r;
}

}  // namespace pinfield
