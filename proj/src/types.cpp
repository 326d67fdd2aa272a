#include "hydra/types.hpp"

#include <algorithm>
#include <set>

#include "hydra/error.hpp"

namespace hydra {

ClassSet ClassSet::defaults(std::string plot_type) {
  return {std::move(plot_type), {"Good", "Bad", "NoData"}, {"Bad"}};
}

bool ClassSet::contains(std::string_view class_name) const {
  return std::find(classes.begin(), classes.end(), class_name) != classes.end();
}

bool ClassSet::is_alarm(std::string_view class_name) const {
  return std::find(alarm_classes.begin(), alarm_classes.end(), class_name) !=
         alarm_classes.end();
}

void ClassSet::validate() const {
  if (classes.empty()) fail(ErrorCode::InvalidArgument, "class set is empty");
  std::set<std::string> seen;
  for (const auto& c : classes) {
    if (c.empty()) fail(ErrorCode::InvalidArgument, "empty class name");
    if (!seen.insert(c).second)
      fail(ErrorCode::InvalidArgument, "duplicate class name: " + c);
  }
  for (const auto& a : alarm_classes) {
    if (!seen.count(a))
      fail(ErrorCode::InvalidArgument, "alarm class not in class set: " + a);
  }
}

std::size_t argmax(const ConfidenceVector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i].probability > v[best].probability) best = i;
  }
  return best;
}

std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::Ok: return "Ok";
    case Decision::Alarm: return "Alarm";
    case Decision::Flagged: return "Flagged";
    case Decision::NoModel: return "NoModel";
  }
  return "NoModel";
}

Decision parse_decision(std::string_view s) {
  if (s == "Ok") return Decision::Ok;
  if (s == "Alarm") return Decision::Alarm;
  if (s == "Flagged") return Decision::Flagged;
  if (s == "NoModel") return Decision::NoModel;
  fail(ErrorCode::InvalidArgument, "unknown decision: " + std::string(s));
}

double ThresholdTable::threshold(const std::string& class_name) const {
  const auto it = entries.find(class_name);
  return it == entries.end() ? 0.0 : it->second;
}

}  // namespace hydra
