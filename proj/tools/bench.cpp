#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "tsgen/errors.hpp"
#include "tsgen/tds.hpp"
#include "tsgen/transform.hpp"

using namespace tsgen;

namespace {

double seconds(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* kernel, double serial_s, double parallel_s, bool identical) {
    std::printf("%-10s serial %8.3fs   parallel %8.3fs   speedup %.2fx   identical %s\n", kernel,
                serial_s, parallel_s, serial_s / parallel_s, identical ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel benchmark"};
    std::string kernel = "all";
    std::string case_path = "data/ieee39.grid";
    std::size_t n = 400;
    app.add_option("--kernel", kernel, "simulate|fit|encode|all")
        ->check(CLI::IsMember({"simulate", "fit", "encode", "all"}));
    app.add_option("--case", case_path, "grid case file");
    app.add_option("--n", n, "scenario count");
    CLI11_PARSE(app, argc, argv);

    try {
        std::printf("threads: %d\n", omp_get_max_threads());
        const GridCase grid = load_grid_case(case_path);
        ScenarioConfig config;
        config.seed = 12345;

        SampleTable table;
        if (kernel == "simulate" || kernel == "all") {
            SampleTable serial_table, parallel_table;
            const double ts =
                seconds([&] { serial_table = generate_dataset_serial(grid, config, n); });
            const double tp = seconds([&] { parallel_table = generate_dataset(grid, config, n); });
            report("simulate", ts, tp, serial_table.rows == parallel_table.rows);
            table = std::move(parallel_table);
        } else {
            table = generate_dataset(grid, config, n);
        }

        TransformConfig tc;
        tc.seed = 7;
        Transformer transformer = Transformer::fit(table, tc);
        if (kernel == "fit" || kernel == "all") {
            Transformer serial_fit = transformer, parallel_fit = transformer;
            const double ts = seconds([&] { serial_fit = Transformer::fit_serial(table, tc); });
            const double tp = seconds([&] { parallel_fit = Transformer::fit(table, tc); });
            report("fit", ts, tp, serial_fit.fingerprint() == parallel_fit.fingerprint());
        }

        if (kernel == "encode" || kernel == "all") {
            Eigen::MatrixXd serial_enc, parallel_enc;
            const double ts = seconds([&] { serial_enc = transformer.encode_table_serial(table); });
            const double tp = seconds([&] { parallel_enc = transformer.encode_table(table); });
            report("encode", ts, tp,
                   (serial_enc - parallel_enc).cwiseAbs().maxCoeff() == 0.0);
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitDataError;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumericError;
    }
}
