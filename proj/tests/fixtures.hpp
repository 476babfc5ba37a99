#ifndef STE_TESTS_FIXTURES_HPP
#define STE_TESTS_FIXTURES_HPP

#include <string>

#include "ste/corpus.hpp"
#include "ste/oracle.hpp"
#include "ste/training.hpp"

namespace ste::fixtures {

std::string data_dir();
std::string data_path(const std::string& name);

// Loads the shipped Q11 fixture (rubric mirroring the published example).
Dataset load_q11();

// Synthetic question with 10 machine-ruled criteria (5 E, 3 O, 2 G), all
// binary; the training workhorse.
Question synthetic_question();

// Per-criterion injection rates in [0.2, 0.4] for synthetic_question().
ErrorProfile synthetic_profile();

// Small three-class question whose first criterion allows partial credit.
Question partial_question();
ErrorProfile partial_profile();

// Dataset shaped like the published Q1 statistics row: 159 responses, 9
// criteria, label counts 923/114/235 (the remaining 159 slots unannotated).
Dataset q1_stats_dataset();

// Fast unit-test training configuration (small widths, few epochs).
TrainingConfig tiny_training_config();

}  // namespace ste::fixtures

#endif  // STE_TESTS_FIXTURES_HPP
