#include "phonosep/conditioning.hpp"

namespace phonosep {

std::string to_string(ConditioningMode m) {
    switch (m) {
        case ConditioningMode::None: return "none";
        case ConditioningMode::WeakSimple: return "weak_simple";
        case ConditioningMode::WeakComplex: return "weak_complex";
        case ConditioningMode::Strong: return "strong";
    }
    return "?";
}

std::string to_string(StrongVariant v) {
    switch (v) {
        case StrongVariant::All: return "all";
        case StrongVariant::Channel: return "channel";
        case StrongVariant::Frequency: return "frequency";
        case StrongVariant::Scalar: return "scalar";
    }
    return "?";
}

std::string to_string(Insertion i) {
    return i == Insertion::Complete ? "complete" : "bottleneck";
}

ConditioningMode conditioning_mode_from_string(const std::string& s) {
    if (s == "none") return ConditioningMode::None;
    if (s == "weak_simple") return ConditioningMode::WeakSimple;
    if (s == "weak_complex") return ConditioningMode::WeakComplex;
    if (s == "strong") return ConditioningMode::Strong;
    throw std::invalid_argument("unknown conditioning mode: " + s);
}

StrongVariant strong_variant_from_string(const std::string& s) {
    if (s == "all") return StrongVariant::All;
    if (s == "channel") return StrongVariant::Channel;
    if (s == "frequency") return StrongVariant::Frequency;
    if (s == "scalar") return StrongVariant::Scalar;
    throw std::invalid_argument("unknown strong variant: " + s);
}

Insertion insertion_from_string(const std::string& s) {
    if (s == "complete") return Insertion::Complete;
    if (s == "bottleneck") return Insertion::Bottleneck;
    throw std::invalid_argument("unknown insertion: " + s);
}

}  // namespace phonosep
