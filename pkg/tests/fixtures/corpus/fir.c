/* FIR filter over floats with constant global taps. */
#include <stdio.h>

#define TAPS 8
#define LEN 4096

const float taps[TAPS] = {0.05f, 0.1f, 0.15f, 0.2f, 0.2f, 0.15f, 0.1f, 0.05f};
float signal_in[LEN + TAPS], signal_out[LEN];

int main(void)
{
    int n, t;
    for (n = 0; n < LEN + TAPS; n++)
        signal_in[n] = (float)((n * 31) % 17) - 8.0f;
    for (n = 0; n < LEN; n++) {
        float acc = 0.0f;
        for (t = 0; t < TAPS; t++)
            acc += taps[t] * signal_in[n + t];
        signal_out[n] = acc;
    }
    double energy = 0.0;
    for (n = 0; n < LEN; n++)
        energy += signal_out[n] * signal_out[n];
    printf("%.4f\n", energy);
    return 0;
}
