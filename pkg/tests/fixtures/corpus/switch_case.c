/* switch, break and continue inside a nest are fine. */
#include <stdio.h>

int main(void)
{
    int counts[4] = {0, 0, 0, 0};
    int i, skipped = 0;
    for (i = 0; i < 1000; i++) {
        if (i % 13 == 0) {
            skipped++;
            continue;
        }
        switch (i % 7) {
        case 0:
            counts[0]++;
            break;
        case 1:
        case 2:
            counts[1] += 2;
            break;
        default:
            counts[3]++;
        }
        if (counts[3] > 500)
            break;
    }
    printf("%d %d %d %d %d %d\n", counts[0], counts[1], counts[2], counts[3], skipped, i);
    return 0;
}
