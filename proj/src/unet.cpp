#include "phonosep/unet.hpp"

namespace phonosep {

const std::vector<std::string>& model_variants() {
    static const std::vector<std::string> v = {"unet", "W_si", "W_co", "S_a", "S_a*", "S_c",
                                               "S_c*", "S_f", "S_f*", "S_s", "S_s*"};
    return v;
}

ConditioningConfig config_for_variant(const std::string& variant) {
    ConditioningConfig c;
    if (variant == "unet") {
        c.mode = ConditioningMode::None;
        return c;
    }
    if (variant == "W_si") {
        c.mode = ConditioningMode::WeakSimple;
        return c;
    }
    if (variant == "W_co") {
        c.mode = ConditioningMode::WeakComplex;
        return c;
    }
    if (variant.size() >= 3 && variant[0] == 'S' && variant[1] == '_') {
        c.mode = ConditioningMode::Strong;
        switch (variant[2]) {
            case 'a': c.strong_variant = StrongVariant::All; break;
            case 'c': c.strong_variant = StrongVariant::Channel; break;
            case 'f': c.strong_variant = StrongVariant::Frequency; break;
            case 's': c.strong_variant = StrongVariant::Scalar; break;
            default: throw std::invalid_argument("unknown model variant: " + variant);
        }
        c.insertion = variant.back() == '*' ? Insertion::Bottleneck : Insertion::Complete;
        if (variant.size() > 4 || (variant.size() == 4 && variant.back() != '*'))
            throw std::invalid_argument("unknown model variant: " + variant);
        return c;
    }
    throw std::invalid_argument("unknown model variant: " + variant);
}

long param_count(const std::string& variant, const UNetConfig& cfg) {
    UNet<float> model(cfg, config_for_variant(variant), 0);
    ParamBreakdown pb = model.count_parameters();
    if (variant == "unet") return pb.total();
    return pb.control + pb.basis;  // increment over the base U-Net
}

}  // namespace phonosep
