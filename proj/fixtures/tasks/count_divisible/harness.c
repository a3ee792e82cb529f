int count_divisible(const int *a, int n, int k);

int main(void) {
  int values[] = {3, 6, 7, 9, 10, -12, 0};
  if (count_divisible(values, 0, 3) != 0) return 1;
  if (count_divisible(values, 7, 3) != 5) return 2;
  if (count_divisible(values, 7, 5) != 2) return 3;
  if (count_divisible(values, 7, 1) != 7) return 4;
  return 0;
}
