#ifndef COBST_TRACKING_INSTRUMENT_HPP
#define COBST_TRACKING_INSTRUMENT_HPP

/// \file
/// Instrument for stress runs: gives every node an id and records the ids
/// of unlinked nodes, so validate() can detect a node that comes back.
/// Adds no yield points and no per-access cost.

#include <memory>

#include "cobst/instrument.hpp"
#include "cobst/tree_core.hpp"

namespace cobst {

struct TrackingInstrument : NullInstrument {
  static constexpr bool kTracksNodes = true;

  void on_unlink(const Node& n) { registry->add(n.id); }
  [[nodiscard]] UnlinkedRegistry& unlinked() const { return *registry; }

  std::shared_ptr<UnlinkedRegistry> registry =
      std::make_shared<UnlinkedRegistry>();
};

}  // namespace cobst

#endif  // COBST_TRACKING_INSTRUMENT_HPP
