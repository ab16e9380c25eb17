#include "owgp/actions.h"

namespace owgp {

std::string action_to_string(const Action& a) {
  struct Printer {
    std::string operator()(const MoveBaseAction& m) const {
      return "movebase(" + m.target + ")";
    }
    std::string operator()(const LookAction& l) const {
      return "look(" + l.obj + ")";
    }
    std::string operator()(const LookAtRegionAction& l) const {
      return "lookatregion(" + l.region + ")";
    }
    std::string operator()(const PickAction& p) const {
      return "pick(" + p.obj + ")";
    }
    std::string operator()(const PlaceAction& p) const {
      return "place(" + p.obj + ", " + p.region + ")";
    }
    std::string operator()(const WeighAction& w) const {
      return "weigh(" + w.obj + ")";
    }
  };
  return std::visit(Printer{}, a);
}

std::string action_subject(const Action& a) {
  struct Subject {
    std::string operator()(const MoveBaseAction& m) const { return m.target; }
    std::string operator()(const LookAction& l) const { return l.obj; }
    std::string operator()(const LookAtRegionAction& l) const { return l.region; }
    std::string operator()(const PickAction& p) const { return p.obj; }
    std::string operator()(const PlaceAction& p) const { return p.obj; }
    std::string operator()(const WeighAction& w) const { return w.obj; }
  };
  return std::visit(Subject{}, a);
}

}  // namespace owgp
