#pragma once

int f(int x);
int g(int y);
