#include "duprg/aggregate.hpp"

#include "duprg/errors.hpp"

namespace duprg {

UnifiedReps mean_pool(const Matrix& rows, std::size_t domains, const std::vector<std::string>& class_names) {
    const std::size_t classes = class_names.size();
    if (domains == 0 || classes == 0 || rows.rows != domains * classes) {
        throw DimensionError("mean_pool: " + std::to_string(rows.rows) + " rows do not form an M x C grid with M=" +
                             std::to_string(domains) + ", C=" + std::to_string(classes));
    }
    UnifiedReps out;
    out.dims = rows.cols;
    out.class_names = class_names;
    out.data = class_means(rows, domains, classes);
    return out;
}

UnifiedReps mean_pool(const PromptTensor& t) {
    validate(t);
    return mean_pool(t.data, t.domains(), t.class_names);
}

UnifiedReps cae_unify(const PromptTensor& t, const CaeModel& model) {
    validate(t);
    return mean_pool(forward(model, t), t.domains(), t.class_names);
}

} // namespace duprg
