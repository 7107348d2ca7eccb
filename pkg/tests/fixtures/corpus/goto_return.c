/* Irregular control flow: return, goto and labels inside nests. */
#include <stdio.h>

int data[64];

int find(int key)
{
    for (int i = 0; i < 64; i++)
        if (data[i] == key)
            return i;
    return -1;
}

int scan(void)
{
    int i, j, hits = 0;
    for (i = 0; i < 8; i++)
        for (j = 0; j < 8; j++)
            if (data[i * 8 + j] < 0)
                goto out;
            else
                hits++;
out:
    for (i = 0; i < 8; i++) {
retry:
        if (data[i] > 1000) {
            data[i] -= 1000;
            goto retry;
        }
    }
    return hits;
}

int main(void)
{
    int i;
    for (i = 0; i < 64; i++)
        data[i] = (i * 29) % 64 + (i == 3 ? 2000 : 0);
    printf("%d %d %d\n", find(17), scan(), data[3]);
    return 0;
}
