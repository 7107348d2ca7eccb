/* for-nests inside while and do bodies; a while loop on its own is not a nest. */
#include <stdio.h>

int main(void)
{
    int v[32];
    int round = 0, i;
    long total = 0;
    for (i = 0; i < 32; i++)
        v[i] = i;
    while (round < 5) {
        for (i = 0; i < 32; i++)
            v[i] = (v[i] * 3 + round) % 97;
        round++;
    }
    i = 0;
    while (i < 32) {
        total += v[i];
        i++;
    }
    do {
        for (int j = 0; j < 32; j += 2)
            total -= v[j] / 2;
        round--;
    } while (round > 3);
    printf("%ld %d\n", total, round);
    return 0;
}
