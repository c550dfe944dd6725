#pragma once

typedef int (*CmdHandler)(int);

void register_cmd(const char* name, CmdHandler handler);
void reportError(const char* msg);
