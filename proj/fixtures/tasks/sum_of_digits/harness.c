int sum_of_digits(int n);

int main(void) {
  if (sum_of_digits(0) != 0) return 1;
  if (sum_of_digits(7) != 7) return 2;
  if (sum_of_digits(1234) != 10) return 3;
  if (sum_of_digits(-905) != 14) return 4;
  if (sum_of_digits(99999) != 45) return 5;
  return 0;
}
