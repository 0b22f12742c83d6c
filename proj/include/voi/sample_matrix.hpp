#ifndef VOI_SAMPLE_MATRIX_HPP
#define VOI_SAMPLE_MATRIX_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace voi {

// Aligned joint draws of model inputs and outputs: row r of every column
// belongs to the same draw. Columns are stored column-major. Output columns
// are named "deaths[<scenario>]" / "deaths_averted[<scenario>]"; everything
// else is a parameter column.
struct SampleMatrix {
    std::size_t rows = 0;
    std::vector<std::string> param_names;
    std::vector<std::vector<double>> params;
    std::vector<std::string> output_names;
    std::vector<std::vector<double>> outputs;

    const std::vector<double>& param(const std::string& name) const;
    const std::vector<double>& output(const std::string& name) const;
    bool has_param(const std::string& name) const;
    bool has_output(const std::string& name) const;

    // Column order: parameters (alphabetical as stored), then outputs.
    void write_csv(const std::filesystem::path& path) const;
    static SampleMatrix read_csv(const std::filesystem::path& path);

    static bool is_output_name(const std::string& name);
};

} // namespace voi

#endif // VOI_SAMPLE_MATRIX_HPP
