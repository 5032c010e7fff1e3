#include <stdio.h>
#include "gvnn_kit.h"

int main(void) {
    double values[] = {1.0, 2.0, 4.0, 3.0, 0.5, 1.5, 2.5, 1.0, -1.0, 0.0, 2.0, 1.0};
    GvnnSignal *sig = NULL;
    if (gvnn_signal_from_buffer(values, 3, 4, &sig) != GVNN_STATUS_OK) return 1;
    size_t n = 0, t = 0;
    gvnn_signal_dims(sig, &n, &t);
    if (n != 3 || t != 4) return 2;
    double coeffs[12];
    if (gvnn_gvft(sig, NULL, "ic", coeffs, 12) != GVNN_STATUS_OK) return 3;
    double small[2];
    if (gvnn_gvft(sig, NULL, "ic", small, 2) != GVNN_STATUS_INVALID_ARGUMENT) return 4;
    if (gvnn_last_error_message() == NULL) return 5;
    gvnn_signal_free(sig);
    printf("%s %.6f\n", gvnn_version(), coeffs[0]);
    return 0;
}
