#include <stdio.h>
#include "kaczmarz.h"

int main(void) {
    KzSystem *sys = NULL;
    KzNoisySystem *noisy = NULL;
    KzTrajectory *traj = NULL;
    if (kz_system_generate(40, 10, 10, 1.0, 5.0, KZ_SPACING_EVEN, 1, &sys) != KZ_STATUS_OK) {
        fprintf(stderr, "%s\n", kz_last_error_message());
        return 1;
    }
    kz_noise_additive(sys, 0.01, 0.01, 1, &noisy);
    kz_solve(noisy, 1000, 4, 0, 1, &traj);
    double mean[2048];
    size_t len = kz_trajectory_len(traj);
    kz_trajectory_mean(traj, mean, len);
    printf("%zu records, final %g\n", len, mean[len - 1]);
    kz_trajectory_free(traj);
    kz_noisy_free(noisy);
    kz_system_free(sys);
    return 0;
}
